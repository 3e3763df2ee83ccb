"""Causal forest: splits maximize between-child heterogeneity of the
residual-on-residual effect estimate tau = sum(w~ y~) / sum(w~^2)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DegenerateVariationError, ValidationError
from .forest import (
    Forest,
    ForestConfig,
    _fit_forest,
    fit_regression_forest,
    predict,
    predict_oob,
    variable_importance,
)
from .nuisance import NuisanceEstimates


@dataclass
class CausalForestModel:
    forest: Forest
    nuisances: NuisanceEstimates
    config: ForestConfig


def fit_causal_forest(
    ds: Dataset,
    nz: NuisanceEstimates,
    cfg: ForestConfig,
    *,
    threads: int | None = None,
) -> CausalForestModel:
    if nz.e_hat.shape[0] != ds.n:
        raise ValidationError("nuisances were not computed on these rows")
    if float(np.sum(nz.w_tilde**2)) == 0.0:
        raise DegenerateVariationError(
            "sum of squared treatment residuals is zero; no variation to split on"
        )
    forest = _fit_forest(
        ds.covariates,
        nz.y_tilde,
        cfg,
        w=nz.w_tilde,
        arm=ds.treatment.astype(np.int64),
        causal=True,
        threads=threads,
        feature_names=ds.column_names,
    )
    return CausalForestModel(forest=forest, nuisances=nz, config=cfg)


def predict_cate(model: CausalForestModel, X: np.ndarray) -> np.ndarray:
    return predict(model.forest, X)


def predict_cate_oob(model: CausalForestModel, ds: Dataset) -> np.ndarray:
    """Out-of-bag CATE on the training rows; the cross-fit input to DR scores."""
    return predict_oob(model.forest, ds.covariates)


def prescreen_covariates(
    ds: Dataset,
    cfg: ForestConfig,
    percentile: float = 0.75,
    *,
    threads: int | None = None,
) -> np.ndarray:
    """Features whose split-frequency share in the m(x) forest reaches the
    given percentile of shares (ties kept)."""
    if not (0.0 < percentile < 1.0):
        raise ValidationError("percentile must be in (0, 1)")
    m_forest = fit_regression_forest(
        ds.covariates, ds.outcome, cfg, threads=threads,
        feature_names=ds.column_names,
    )
    shares = variable_importance(m_forest).shares
    cutoff = np.quantile(shares, percentile)
    return np.flatnonzero(shares >= cutoff)
