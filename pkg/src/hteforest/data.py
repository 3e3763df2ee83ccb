"""Dataset container, CSV ingestion, train/test splitting, synthetic DGPs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CodingError,
    IngestionError,
    SizeError,
    StratificationError,
    ValidationError,
)

SCENARIOS = ("rct", "confounded", "null_effect")


@dataclass(frozen=True)
class Dataset:
    covariates: np.ndarray  # n x p
    treatment: np.ndarray  # 0/1
    outcome: np.ndarray
    column_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=np.float64)
        w = np.asarray(self.treatment, dtype=np.float64)
        y = np.asarray(self.outcome, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError("covariates must be a 2-d matrix")
        n, p = X.shape
        if n < 2:
            raise ValidationError("need at least 2 rows")
        if p < 1:
            raise ValidationError("need at least 1 covariate")
        if w.shape != (n,) or y.shape != (n,):
            raise ValidationError("treatment/outcome length must match covariates")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValidationError("non-finite entries are not allowed")
        if not np.all(np.isin(w, (0.0, 1.0))):
            raise CodingError("treatment must contain only 0 and 1")
        if w.sum() == 0 or w.sum() == n:
            raise ValidationError("both treatment arms must be present")
        names = list(self.column_names) or [f"x{i + 1}" for i in range(p)]
        if len(names) != p:
            raise ValidationError("column_names length must equal p")
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "treatment", w)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            self.covariates[idx],
            self.treatment[idx],
            self.outcome[idx],
            list(self.column_names),
        )

    def select_columns(self, keep: np.ndarray) -> "Dataset":
        keep = np.asarray(keep, dtype=np.int64)
        return Dataset(
            self.covariates[:, keep],
            self.treatment,
            self.outcome,
            [self.column_names[i] for i in keep],
        )


@dataclass(frozen=True)
class SplitIndices:
    train_idx: np.ndarray
    test_idx: np.ndarray
    seed: int


@dataclass(frozen=True)
class DgpSpec:
    n: int
    p: int
    scenario: str
    seed: int

    def __post_init__(self):
        if self.n < 20:
            raise ValidationError("simulate needs n >= 20")
        if self.p < 2:
            raise ValidationError("simulate needs p >= 2")
        if self.scenario not in SCENARIOS:
            raise ValidationError(
                f"scenario must be one of {SCENARIOS}, got {self.scenario!r}"
            )


def load_csv(path: str, treatment_col: str, outcome_col: str) -> Dataset:
    """Read a comma-separated, headered, fully numeric file into a Dataset."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in (treatment_col, outcome_col):
            if col not in header:
                raise ValidationError(f"column {col!r} not found in {path}")
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise IngestionError(
                    f"{path}:{rownum}: expected {len(header)} cells, got {len(row)}"
                )
            parsed = []
            for col, cell in zip(header, row):
                cell = cell.strip()
                if cell == "":
                    raise IngestionError(
                        f"{path}:{rownum}: empty cell in column {col!r}"
                    )
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(
                        f"{path}:{rownum}: non-numeric value {cell!r} "
                        f"in column {col!r}"
                    ) from None
                if not math.isfinite(v):
                    raise IngestionError(
                        f"{path}:{rownum}: non-finite value in column {col!r}"
                    )
                parsed.append(v)
            rows.append(parsed)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    mat = np.asarray(rows, dtype=np.float64)
    w_pos = header.index(treatment_col)
    y_pos = header.index(outcome_col)
    w = mat[:, w_pos]
    for rownum, v in enumerate(w, start=2):
        if v not in (0.0, 1.0):
            raise CodingError(
                f"{path}:{rownum}: treatment value {v!r} outside {{0, 1}}"
            )
    cov_pos = [i for i in range(len(header)) if i not in (w_pos, y_pos)]
    return Dataset(
        mat[:, cov_pos],
        w,
        mat[:, y_pos],
        [header[i] for i in cov_pos],
    )


def save_csv(ds: Dataset, path: str, treatment_col: str = "w",
             outcome_col: str = "y") -> None:
    from .io_utils import atomic_write_text

    header = list(ds.column_names) + [treatment_col, outcome_col]
    lines = [",".join(header)]
    for i in range(ds.n):
        cells = [repr(float(v)) for v in ds.covariates[i]]
        cells.append(str(int(ds.treatment[i])))
        cells.append(repr(float(ds.outcome[i])))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def split_train_test(ds: Dataset, train_fraction: float, seed: int) -> SplitIndices:
    """Seeded split, stratified by treatment arm so both arms land in both parts."""
    if not (0.0 < train_fraction < 1.0):
        raise ValidationError("train_fraction must be in (0, 1)")
    n = ds.n
    n_train = int(math.floor(train_fraction * n))
    n_test = n - n_train
    if n_train < 2 or n_test < 2:
        raise SizeError(
            f"split sizes {n_train}/{n_test} too small (need >= 2 in each part)"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    w = ds.treatment[order]
    arm1 = order[w == 1.0]
    arm0 = order[w == 0.0]
    if arm1.size < 2 or arm0.size < 2:
        raise StratificationError(
            "each arm needs at least 2 units to appear in both parts"
        )
    # proportional allocation with the leftover decided by fractional remainder
    t1 = int(math.floor(train_fraction * arm1.size))
    t0 = n_train - t1
    if t0 > arm0.size:
        t0 = arm0.size
        t1 = n_train - t0
    # make sure both arms appear in both parts
    t1 = min(max(t1, 1), arm1.size - 1)
    t0 = n_train - t1
    if not (1 <= t0 <= arm0.size - 1):
        raise StratificationError(
            "cannot place both arms in both parts at this train_fraction"
        )
    train = np.sort(np.concatenate([arm1[:t1], arm0[:t0]]))
    mask = np.ones(n, dtype=bool)
    mask[train] = False
    test = np.flatnonzero(mask)
    return SplitIndices(train, test, seed)


def simulate(spec: DgpSpec) -> tuple[Dataset, np.ndarray, float]:
    """Seeded synthetic DGP with a known CATE; returns (data, true_tau, true_ate).

    X ~ U(0,1)^p; rct has e=0.5, the other scenarios e(x)=0.3+0.4*x1;
    tau(x)=x2 except null_effect (tau=0); baseline b(x)=x1+x3 (x3=0 if p<3);
    Y = b + W*tau + N(0, 0.5^2).
    """
    rng = np.random.default_rng(spec.seed)
    X = rng.uniform(0.0, 1.0, size=(spec.n, spec.p))
    if spec.scenario == "rct":
        e = np.full(spec.n, 0.5)
    else:
        e = 0.3 + 0.4 * X[:, 0]
    W = (rng.uniform(size=spec.n) < e).astype(np.float64)
    if W.sum() == 0 or W.sum() == spec.n:  # vanishingly unlikely for n >= 20
        W[0] = 1.0 - W[0]
    tau = np.zeros(spec.n) if spec.scenario == "null_effect" else X[:, 1].copy()
    b = X[:, 0] + (X[:, 2] if spec.p >= 3 else 0.0)
    eps = rng.normal(0.0, 0.5, size=spec.n)
    Y = b + W * tau + eps
    ds = Dataset(X, W, Y, [f"x{i + 1}" for i in range(spec.p)])
    return ds, tau, float(tau.mean())
