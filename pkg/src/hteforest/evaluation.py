"""Rank-based evaluation of prioritization rules: TOC, AUTOC, Qini, tests.

Standard errors come from a half-sample bootstrap: B replicates, each drawing
floor(n/2) units without replacement with a stream keyed by (seed, replicate),
recomputing the curve on the subsample while holding the rule fixed.  For
sampling half the data without replacement the replicate spread already
matches the full-sample sampling error (the finite-population correction
cancels the sample-size factor), so the replicate standard deviation is used
as-is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import Dataset
from .effects import DrScores
from .errors import (
    DegenerateInferenceError,
    SizeError,
    ValidationError,
)
from .forest import Forest, ForestConfig, fit_regression_forest

DEFAULT_BOOTSTRAP_B = 200


@dataclass
class PriorityRule:
    name: str
    scores: np.ndarray  # higher = treat earlier

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(self.scores)):
            raise ValidationError("rule scores must be finite")


@dataclass
class CurveResult:
    kind: str  # "toc" | "qini"
    grid: np.ndarray
    values: np.ndarray
    pointwise_se: np.ndarray | None
    summary: float
    summary_se: float
    bootstrap: dict = field(default_factory=dict)
    baseline: np.ndarray | None = None


@dataclass
class AutocTest:
    autoc: float
    se: float
    t_value: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "autoc": float(self.autoc),
            "se": float(self.se),
            "t_value": float(self.t_value),
            "p_value": float(self.p_value),
        }


def _rank_desc(scores: np.ndarray) -> np.ndarray:
    # stable sort on the negated scores: ties keep original index order
    return np.argsort(-scores, kind="stable")


def _toc_values(gamma_sorted: np.ndarray) -> np.ndarray:
    n = gamma_sorted.shape[0]
    cummean = np.cumsum(gamma_sorted) / np.arange(1, n + 1)
    return cummean - cummean[-1]


def _replicate_indices(n: int, B: int, seed: int) -> list[np.ndarray]:
    m = n // 2
    return [
        np.random.default_rng([seed, b]).choice(n, size=m, replace=False)
        for b in range(B)
    ]


def toc_curve(
    scores: DrScores,
    rule: PriorityRule,
    bootstrap_B: int = DEFAULT_BOOTSTRAP_B,
    seed: int = 0,
) -> CurveResult:
    """TOC(j/n) = mean of gamma over the top j ranked units minus the overall
    mean; AUTOC is the discrete average of the curve."""
    g = scores.gamma
    n = g.shape[0]
    if rule.scores.shape[0] != n:
        raise ValidationError("rule scores must align with gamma")
    if n < 4:
        raise SizeError("TOC needs at least 4 units")
    if bootstrap_B < 2:
        raise ValidationError("bootstrap_B must be >= 2")

    order = _rank_desc(rule.scores)
    values = _toc_values(g[order])
    autoc = float(values.mean())
    grid = np.arange(1, n + 1) / n

    m = n // 2
    rep_autoc = np.empty(bootstrap_B)
    rep_on_grid = np.empty((bootstrap_B, n))
    # map each full-grid quantile to the subsample grid (step interpolation)
    j_map = np.minimum(np.ceil(grid * m).astype(np.int64), m)
    j_map = np.maximum(j_map, 1) - 1
    for b, sub in enumerate(_replicate_indices(n, bootstrap_B, seed)):
        sub_order = sub[_rank_desc(rule.scores[sub])]
        v = _toc_values(g[sub_order])
        rep_autoc[b] = v.mean()
        rep_on_grid[b] = v[j_map]
    summary_se = float(np.std(rep_autoc, ddof=1))
    pointwise_se = np.std(rep_on_grid, axis=0, ddof=1)

    return CurveResult(
        kind="toc",
        grid=grid,
        values=values,
        pointwise_se=pointwise_se,
        summary=autoc,
        summary_se=summary_se,
        bootstrap={"B": bootstrap_B, "seed": seed},
    )


def _z_test(estimate: float, se: float) -> AutocTest:
    if se <= 0.0:
        raise DegenerateInferenceError(
            "zero bootstrap variance; the statistic carries no sampling noise "
            "(identical rankings or a degenerate sample)"
        )
    t = estimate / se
    p = float(2.0 * stats.norm.sf(abs(t)))
    return AutocTest(autoc=float(estimate), se=float(se), t_value=float(t), p_value=p)


def autoc_test(curve: CurveResult) -> AutocTest:
    if curve.kind != "toc":
        raise ValidationError("autoc_test needs a TOC curve")
    return _z_test(curve.summary, curve.summary_se)


def autoc_difference_test(
    scores: DrScores,
    rule_a: PriorityRule,
    rule_b: PriorityRule,
    bootstrap_B: int = DEFAULT_BOOTSTRAP_B,
    seed: int = 0,
) -> AutocTest:
    """Paired half-sample bootstrap test of AUTOC(rule_a) - AUTOC(rule_b)."""
    g = scores.gamma
    n = g.shape[0]
    if rule_a.scores.shape[0] != n or rule_b.scores.shape[0] != n:
        raise ValidationError("rules must be scored on the same units as gamma")
    if n < 4:
        raise SizeError("needs at least 4 units")

    def full_autoc(rule: PriorityRule) -> float:
        return float(_toc_values(g[_rank_desc(rule.scores)]).mean())

    diff = full_autoc(rule_a) - full_autoc(rule_b)
    rep_diff = np.empty(bootstrap_B)
    for b, sub in enumerate(_replicate_indices(n, bootstrap_B, seed)):
        va = _toc_values(g[sub[_rank_desc(rule_a.scores[sub])]]).mean()
        vb = _toc_values(g[sub[_rank_desc(rule_b.scores[sub])]]).mean()
        rep_diff[b] = va - vb
    se = float(np.std(rep_diff, ddof=1))
    return _z_test(diff, se)


def qini_curve(
    scores: DrScores,
    rule: PriorityRule,
    bootstrap_B: int = DEFAULT_BOOTSTRAP_B,
    seed: int = 0,
) -> CurveResult:
    """Qini(k): expected total benefit of treating the k highest-priority
    units; the baseline is the random-targeting straight line (k/n) * sum."""
    g = scores.gamma
    n = g.shape[0]
    if rule.scores.shape[0] != n:
        raise ValidationError("rule scores must align with gamma")
    mean_g = float(np.mean(g))

    order = _rank_desc(rule.scores)
    ks = np.arange(1, n + 1)
    values = np.cumsum(g[order])
    # the endpoint and baseline are defined through n * mean so that
    # Qini(n) == n * ATE holds bit-exactly
    values[-1] = n * mean_g
    baseline = ks * mean_g

    m = n // 2
    rep_on_grid = np.empty((bootstrap_B, n))
    rep_end = np.empty(bootstrap_B)
    j_map = np.minimum(np.ceil(ks / n * m).astype(np.int64), m)
    j_map = np.maximum(j_map, 1) - 1
    for b, sub in enumerate(_replicate_indices(n, bootstrap_B, seed)):
        gs = g[sub[_rank_desc(rule.scores[sub])]]
        cummean = np.cumsum(gs) / np.arange(1, m + 1)
        rep_on_grid[b] = ks * cummean[j_map]
        rep_end[b] = n * gs.mean()
    pointwise_se = np.std(rep_on_grid, axis=0, ddof=1)
    summary_se = float(np.std(rep_end, ddof=1))

    return CurveResult(
        kind="qini",
        grid=ks.astype(np.float64),
        values=values,
        pointwise_se=pointwise_se,
        summary=float(values[-1]),
        summary_se=summary_se,
        bootstrap={"B": bootstrap_B, "seed": seed},
        baseline=baseline,
    )


def fit_risk_model(
    ds_train: Dataset,
    arm: int,
    cfg: ForestConfig,
    *,
    threads: int | None = None,
) -> Forest:
    """Regression forest for the outcome within one treatment arm.

    Predictions on held-out units form a risk-based priority rule; for a
    beneficial treatment with arm=0 and higher outcome = better, negate the
    predictions so higher risk means higher priority.
    """
    mask = ds_train.treatment == float(arm)
    if not np.any(mask):
        raise SizeError(f"no units with treatment == {arm}")
    X = ds_train.covariates[mask]
    y = ds_train.outcome[mask]
    return fit_regression_forest(
        X, y, cfg, threads=threads, feature_names=ds_train.column_names
    )
