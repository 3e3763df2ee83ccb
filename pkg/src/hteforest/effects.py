"""Average effects: difference in means, doubly-robust scores, group ATEs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import SizeError, ValidationError
from .nuisance import NuisanceEstimates

Z_95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass
class AteResult:
    estimate: float
    std_error: float
    n: int
    method: str  # "diff_means" | "aipw"

    @property
    def ci_low(self) -> float:
        return self.estimate - Z_95 * self.std_error

    @property
    def ci_high(self) -> float:
        return self.estimate + Z_95 * self.std_error

    def to_dict(self) -> dict:
        return {
            "estimate": float(self.estimate),
            "std_error": float(self.std_error),
            "ci_low": float(self.ci_low),
            "ci_high": float(self.ci_high),
            "n": int(self.n),
            "method": self.method,
        }


@dataclass
class DrScores:
    gamma: np.ndarray
    inputs: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]


def difference_in_means(ds: Dataset) -> AteResult:
    treated = ds.outcome[ds.treatment == 1.0]
    control = ds.outcome[ds.treatment == 0.0]
    if treated.size == 0 or control.size == 0:
        raise SizeError("both arms must be non-empty")
    est = float(treated.mean() - control.mean())
    v1 = float(treated.var(ddof=1)) if treated.size > 1 else 0.0
    v0 = float(control.var(ddof=1)) if control.size > 1 else 0.0
    se = float(np.sqrt(v1 / treated.size + v0 / control.size))
    return AteResult(est, se, ds.n, "diff_means")


def compute_dr_scores(
    ds: Dataset, nz: NuisanceEstimates, tau_hat: np.ndarray
) -> DrScores:
    """AIPW scores in residual form:
    gamma_i = tau_i + (W_i - e_i) / (e_i (1 - e_i)) * (Y_i - m_i - (W_i - e_i) tau_i).
    """
    tau_hat = np.asarray(tau_hat, dtype=np.float64)
    if not (nz.e_hat.shape[0] == ds.n == tau_hat.shape[0]):
        raise ValidationError("dataset, nuisances and tau_hat must be row-aligned")
    e = nz.e_hat
    if np.any(e <= 0.0) or np.any(e >= 1.0):
        raise ValidationError("propensity values must lie strictly in (0, 1)")
    w_res = ds.treatment - e
    correction = w_res / (e * (1.0 - e))
    gamma = tau_hat + correction * (ds.outcome - nz.m_hat - w_res * tau_hat)
    return DrScores(
        gamma=gamma,
        inputs={"nuisance_source": nz.source, "n": int(ds.n)},
    )


def ate_aipw(scores: DrScores) -> AteResult:
    g = scores.gamma
    if g.shape[0] < 2:
        raise SizeError("need at least 2 scores")
    est = float(np.mean(g))
    se = float(np.std(g, ddof=1) / np.sqrt(g.shape[0]))
    return AteResult(est, se, g.shape[0], "aipw")


def group_ates(
    scores: DrScores, priority: np.ndarray, num_groups: int = 4
) -> list[AteResult]:
    """AIPW ATE within equal-count buckets of ascending priority.

    Ties are broken by original index; when n is not divisible, the extra
    units go to the lowest buckets.
    """
    priority = np.asarray(priority, dtype=np.float64)
    n = scores.n
    if priority.shape[0] != n:
        raise ValidationError("priority length must match scores")
    if num_groups < 2:
        raise ValidationError("num_groups must be >= 2")
    if n < 2 * num_groups:
        raise SizeError(f"need at least {2 * num_groups} units for {num_groups} groups")
    order = np.argsort(priority, kind="stable")
    base = n // num_groups
    rem = n % num_groups
    results = []
    lo = 0
    for g in range(num_groups):
        size = base + (1 if g < rem else 0)
        bucket = order[lo : lo + size]
        lo += size
        results.append(ate_aipw(DrScores(scores.gamma[bucket])))
    return results
