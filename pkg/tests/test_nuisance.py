import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hteforest import (
    DgpSpec,
    ForestConfig,
    NuisanceEstimates,
    estimate_nuisances,
    overlap_report,
    simulate,
)
from hteforest.errors import ValidationError


def supplied(e_hat, m_hat=None, clipped=0):
    n = e_hat.shape[0]
    m_hat = np.zeros(n) if m_hat is None else m_hat
    return NuisanceEstimates(
        e_hat=e_hat,
        m_hat=m_hat,
        w_tilde=np.zeros(n),
        y_tilde=np.zeros(n),
        source="supplied",
        clipped_count=clipped,
    )


class TestEstimate:
    def test_known_constant_propensity(self, tiny_dataset, fast_config):
        nz = estimate_nuisances(tiny_dataset, fast_config, known_propensity=0.5)
        assert nz.source == "supplied"
        np.testing.assert_array_equal(nz.e_hat, 0.5)
        assert set(np.unique(nz.w_tilde)) == {-0.5, 0.5}

    def test_residual_identities_exact(self, tiny_dataset, fast_config):
        nz = estimate_nuisances(tiny_dataset, fast_config)
        np.testing.assert_array_equal(nz.y_tilde, tiny_dataset.outcome - nz.m_hat)
        np.testing.assert_array_equal(nz.w_tilde, tiny_dataset.treatment - nz.e_hat)

    def test_supplied_propensity_out_of_range(self, tiny_dataset, fast_config):
        with pytest.raises(ValidationError):
            estimate_nuisances(tiny_dataset, fast_config, known_propensity=0.0)
        with pytest.raises(ValidationError):
            estimate_nuisances(tiny_dataset, fast_config, known_propensity=1.0)

    def test_estimated_propensity_clipped(self, fast_config):
        # strongly separable treatment: raw oob propensities hit 0 and 1
        rng = np.random.default_rng(20)
        X = rng.uniform(size=(60, 2))
        w = (X[:, 0] > 0.5).astype(float)
        from hteforest import Dataset

        ds = Dataset(X, w, rng.normal(size=60))
        nz = estimate_nuisances(ds, fast_config, clip_eps=0.01)
        assert nz.clipped_count > 0
        assert nz.e_hat.min() >= 0.01
        assert nz.e_hat.max() <= 0.99

    def test_clipping_is_idempotent(self, fast_config):
        rng = np.random.default_rng(21)
        from hteforest import Dataset

        X = rng.uniform(size=(60, 2))
        w = (X[:, 0] > 0.5).astype(float)
        ds = Dataset(X, w, rng.normal(size=60))
        nz = estimate_nuisances(ds, fast_config, clip_eps=0.05)
        twice = np.clip(nz.e_hat, 0.05, 0.95)
        np.testing.assert_array_equal(twice, nz.e_hat)

    def test_supplied_invariant_to_config(self, tiny_dataset):
        a = estimate_nuisances(
            tiny_dataset, ForestConfig(num_trees=20, seed=1), known_propensity=0.5
        )
        b = estimate_nuisances(
            tiny_dataset, ForestConfig(num_trees=20, seed=99), known_propensity=0.5
        )
        np.testing.assert_array_equal(a.e_hat, b.e_hat)

    def test_confounded_propensity_recovery(self):
        ds, _, _ = simulate(DgpSpec(n=4000, p=5, scenario="confounded", seed=30))
        cfg = ForestConfig(num_trees=150, seed=13)
        nz = estimate_nuisances(ds, cfg)
        true_e = 0.3 + 0.4 * ds.covariates[:, 0]
        mae = np.mean(np.abs(nz.e_hat - true_e))
        assert mae < 0.07

    def test_bad_clip_eps(self, tiny_dataset, fast_config):
        with pytest.raises(ValidationError):
            estimate_nuisances(tiny_dataset, fast_config, clip_eps=0.5)


class TestOverlap:
    def test_constant_half_single_bin(self):
        rep = overlap_report(supplied(np.full(40, 0.5)))
        assert rep.bin_counts.sum() == 40
        occupied = np.flatnonzero(rep.bin_counts)
        assert occupied.tolist() == [10]  # [0.5, 0.55)
        assert not rep.warning

    def test_warning_threshold(self):
        n = 100
        rep = overlap_report(supplied(np.full(n, 0.5), clipped=6))
        assert rep.warning
        rep = overlap_report(supplied(np.full(n, 0.5), clipped=5))
        assert not rep.warning

    def test_concentrated_scores_confined_bins(self):
        rng = np.random.default_rng(22)
        e = rng.uniform(0.5, 0.7, size=500)
        rep = overlap_report(supplied(e))
        occupied = np.flatnonzero(rep.bin_counts)
        # bins covering [0.5, 0.7) are indices 10..13
        assert occupied.min() >= 10 and occupied.max() <= 13

    def test_counts_sum_to_n_and_roundtrip(self):
        rng = np.random.default_rng(23)
        e = rng.uniform(0.01, 0.99, size=137)
        rep = overlap_report(supplied(e))
        assert rep.bin_counts.sum() == 137
        d = rep.to_dict()
        assert len(d["bin_edges"]) == 21
        assert sum(d["bin_counts"]) == 137
        assert d["min"] == float(e.min()) and d["max"] == float(e.max())

    @given(eps=st.floats(min_value=0.001, max_value=0.4))
    @settings(max_examples=25, deadline=None)
    def test_clip_idempotence_property(self, eps):
        rng = np.random.default_rng(24)
        raw = rng.uniform(-0.2, 1.2, size=50)
        once = np.clip(raw, eps, 1 - eps)
        np.testing.assert_array_equal(np.clip(once, eps, 1 - eps), once)
