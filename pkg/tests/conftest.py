import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hteforest import Dataset, ForestConfig, NuisanceEstimates


@pytest.fixture
def tiny_dataset():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(40, 3))
    w = (rng.uniform(size=40) < 0.5).astype(float)
    w[:2] = [0.0, 1.0]  # guarantee both arms
    y = X[:, 0] + w * X[:, 1] + rng.normal(0, 0.1, 40)
    return Dataset(X, w, y)


@pytest.fixture
def fast_config():
    return ForestConfig(num_trees=30, min_node_size=3, seed=11)


def make_supplied_nuisances(ds, e=0.5, m=0.0):
    """NuisanceEstimates with constant supplied propensity and mean."""
    e_hat = np.full(ds.n, float(e))
    m_hat = np.full(ds.n, float(m))
    return NuisanceEstimates(
        e_hat=e_hat,
        m_hat=m_hat,
        w_tilde=ds.treatment - e_hat,
        y_tilde=ds.outcome - m_hat,
        source="supplied",
    )
