"""First-stage estimation: propensity e(x), conditional mean m(x), residuals."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .forest import ForestConfig, fit_regression_forest, predict_oob

NUM_OVERLAP_BINS = 20
OVERLAP_WARN_FRACTION = 0.05


@dataclass
class NuisanceEstimates:
    e_hat: np.ndarray
    m_hat: np.ndarray
    w_tilde: np.ndarray
    y_tilde: np.ndarray
    source: str  # "estimated" | "supplied"
    clipped_count: int = 0
    clip_eps: float = 0.01


@dataclass
class OverlapReport:
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    min: float
    max: float
    clipped_count: int
    warning: bool

    def to_dict(self) -> dict:
        return {
            "bin_edges": [float(b) for b in self.bin_edges],
            "bin_counts": [int(c) for c in self.bin_counts],
            "min": float(self.min),
            "max": float(self.max),
            "clipped_count": int(self.clipped_count),
            "warning": bool(self.warning),
        }


def estimate_nuisances(
    ds: Dataset,
    cfg: ForestConfig,
    known_propensity=None,
    clip_eps: float = 0.01,
    *,
    threads: int | None = None,
) -> NuisanceEstimates:
    """OOB forest estimates of m(x) and e(x), or a supplied propensity.

    The m(x) forest uses cfg as given; the propensity forest (when fit) uses
    the same settings with seed cfg.seed + 1 so the two streams never collide.
    """
    if not (0.0 < clip_eps < 0.5):
        raise ValidationError("clip_eps must be in (0, 0.5)")
    m_forest = fit_regression_forest(
        ds.covariates, ds.outcome, cfg, threads=threads,
        feature_names=ds.column_names,
    )
    m_hat = predict_oob(m_forest, ds.covariates)

    clipped = 0
    if known_propensity is not None:
        e_hat = np.broadcast_to(
            np.asarray(known_propensity, dtype=np.float64), (ds.n,)
        ).copy()
        if np.any(e_hat <= 0.0) or np.any(e_hat >= 1.0):
            raise ValidationError("supplied propensity must lie strictly in (0, 1)")
        source = "supplied"
    else:
        e_cfg = replace(cfg, seed=cfg.seed + 1)
        e_forest = fit_regression_forest(
            ds.covariates, ds.treatment, e_cfg, threads=threads,
            feature_names=ds.column_names,
        )
        raw = predict_oob(e_forest, ds.covariates)
        e_hat = np.clip(raw, clip_eps, 1.0 - clip_eps)
        clipped = int(np.sum(e_hat != raw))
        source = "estimated"

    return NuisanceEstimates(
        e_hat=e_hat,
        m_hat=m_hat,
        w_tilde=ds.treatment - e_hat,
        y_tilde=ds.outcome - m_hat,
        source=source,
        clipped_count=clipped,
        clip_eps=clip_eps,
    )


def overlap_report(nz: NuisanceEstimates) -> OverlapReport:
    """20-bin histogram of e_hat with a warning when clipping is pervasive."""
    n = nz.e_hat.shape[0]
    edges = np.linspace(0.0, 1.0, NUM_OVERLAP_BINS + 1)
    idx = np.minimum(
        (nz.e_hat * NUM_OVERLAP_BINS).astype(np.int64), NUM_OVERLAP_BINS - 1
    )
    counts = np.bincount(idx, minlength=NUM_OVERLAP_BINS)
    return OverlapReport(
        bin_edges=edges,
        bin_counts=counts,
        min=float(nz.e_hat.min()),
        max=float(nz.e_hat.max()),
        clipped_count=nz.clipped_count,
        warning=nz.clipped_count > OVERLAP_WARN_FRACTION * n,
    )
