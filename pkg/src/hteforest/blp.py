"""Best linear projection of DR scores on effect modifiers, HC3 inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .effects import DrScores
from .errors import CollinearityError, ValidationError

RANK_RTOL = 1e-10


@dataclass
class BlpResult:
    coefficients: np.ndarray  # intercept first
    hc3_se: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    n: int
    modifier_names: list[str]

    @property
    def names(self) -> list[str]:
        return ["(intercept)"] + list(self.modifier_names)

    def to_dict(self) -> dict:
        return {
            "n": int(self.n),
            "rows": [
                {
                    "name": name,
                    "coefficient": float(c),
                    "hc3_se": float(s),
                    "t_value": float(t),
                    "p_value": float(p),
                }
                for name, c, s, t, p in zip(
                    self.names,
                    self.coefficients,
                    self.hc3_se,
                    self.t_values,
                    self.p_values,
                )
            ],
        }


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    sv = np.linalg.svd(X, compute_uv=False)
    tol = RANK_RTOL * sv[0] if sv.size else 0.0
    if sv.size and sv[-1] > tol:
        return
    # identify columns that add no rank beyond the preceding ones
    offending = []
    rank = 0
    for j in range(X.shape[1]):
        sub = X[:, : j + 1]
        s = np.linalg.svd(sub, compute_uv=False)
        r = int(np.sum(s > RANK_RTOL * s[0]))
        if r == rank:
            offending.append(names[j])
        rank = r
    raise CollinearityError(
        f"design matrix is rank deficient; offending columns: {offending}"
    )


def best_linear_projection(scores: DrScores, Z: np.ndarray | None = None,
                           modifier_names: list[str] | None = None) -> BlpResult:
    """OLS of gamma on [1, Z] with HC3 (leverage-adjusted) standard errors."""
    g = scores.gamma
    n = g.shape[0]
    if Z is None:
        Z = np.empty((n, 0))
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] != n:
        raise ValidationError("Z must have one row per score")
    k = Z.shape[1]
    if n <= k + 1:
        raise ValidationError(f"need n > k+1 rows (n={n}, k={k})")
    names = list(modifier_names or [f"z{i + 1}" for i in range(k)])
    if len(names) != k:
        raise ValidationError("modifier_names length must match Z columns")

    X = np.column_stack([np.ones(n), Z])
    _check_rank(X, ["(intercept)"] + names)

    Q, R = np.linalg.qr(X)
    beta = np.linalg.solve(R, Q.T @ g)
    resid = g - X @ beta
    leverage = np.sum(Q * Q, axis=1)

    one_minus_h = 1.0 - leverage
    # an exactly-interpolated point has zero residual; define its HC3 weight 0
    adj = np.where(
        np.abs(resid) <= 1e-12 * max(1.0, float(np.abs(g).max())),
        0.0,
        resid / np.where(one_minus_h <= 0.0, 1.0, one_minus_h),
    )
    if np.any((one_minus_h <= 0.0) & (adj != 0.0)):
        raise ValidationError(
            "a unit with leverage 1 has nonzero residual; HC3 is undefined"
        )
    D = adj * adj
    Rinv = np.linalg.inv(R)
    middle = (Q * D[:, None]).T @ Q
    cov = Rinv @ middle @ Rinv.T
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0.0, beta / se, np.inf * np.sign(beta))
        t = np.where((se == 0.0) & (beta == 0.0), 0.0, t)
    p = 2.0 * stats.norm.sf(np.abs(t))
    return BlpResult(
        coefficients=beta,
        hc3_se=se,
        t_values=t,
        p_values=p,
        n=n,
        modifier_names=names,
    )


def modifier_correlations(Z: np.ndarray) -> np.ndarray:
    """Pearson correlation matrix; exactly symmetric with a unit diagonal."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] < 2:
        raise ValidationError("need at least 2 rows")
    stds = Z.std(axis=0)
    if np.any(stds == 0.0):
        bad = np.flatnonzero(stds == 0.0).tolist()
        raise ValidationError(f"constant modifier column(s) at positions {bad}")
    k = Z.shape[1]
    C = np.corrcoef(Z, rowvar=False).reshape(k, k)
    upper = np.triu(C, 1)
    return upper + upper.T + np.eye(k)
