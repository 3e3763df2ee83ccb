"""Honest, subsampled regression forest with out-of-bag prediction.

The same tree grower also powers the causal forest (see cate.py) through the
``causal`` flag: leaves then hold residual-on-residual effect estimates and
splits maximize between-child effect heterogeneity.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import _draw_subsample, _grow_tree, _predict_tree
from .errors import CoverageError, DimensionError, SizeError, ValidationError

SCHEMA_VERSION = 1

_MASK64 = (1 << 64) - 1


def default_threads() -> int:
    return int(os.environ.get("HTEFOREST_THREADS", "1"))


@dataclass(frozen=True)
class ForestConfig:
    num_trees: int = 2000
    subsample_fraction: float = 0.5
    honesty: bool = True
    mtry: int | None = None  # None -> max(1, ceil(sqrt(p)))
    min_node_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.subsample_fraction <= 1.0):
            raise ValidationError("subsample_fraction must be in (0, 1]")
        if self.num_trees < 1:
            raise ValidationError("num_trees must be >= 1")
        if self.min_node_size < 1:
            raise ValidationError("min_node_size must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValidationError("mtry must be >= 1")

    def resolve_mtry(self, p: int) -> int:
        if self.mtry is None:
            return max(1, math.ceil(math.sqrt(p)))
        if self.mtry > p:
            raise ValidationError(f"mtry={self.mtry} exceeds feature count {p}")
        return self.mtry


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    est_count: np.ndarray
    subsample: np.ndarray
    structure_idx: np.ndarray
    estimation_idx: np.ndarray

    def num_internal(self) -> int:
        return int(np.sum(self.feature >= 0))


@dataclass
class Forest:
    trees: list[Tree]
    config: ForestConfig
    n_train: int
    p: int
    kind: str = "regression"  # or "causal"
    feature_names: list[str] = field(default_factory=list)

    def oob_map(self) -> list[np.ndarray]:
        """Per-unit array of tree indices whose subsample excludes the unit."""
        in_sub = np.zeros((self.n_train, len(self.trees)), dtype=bool)
        for t, tree in enumerate(self.trees):
            in_sub[tree.subsample, t] = True
        return [np.flatnonzero(~in_sub[i]) for i in range(self.n_train)]


@dataclass
class ImportanceReport:
    counts: np.ndarray
    shares: np.ndarray
    feature_names: list[str]

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "counts": [int(c) for c in self.counts],
            "shares": [float(s) for s in self.shares],
        }


def _tree_seed_state(seed: int, tree_index: int) -> np.uint64:
    # stable 64-bit mix of (seed, tree_index); the kernel stream does the rest
    z = (seed & _MASK64) * 0x9E3779B97F4A7C15 + (tree_index + 1) * 0xD1B54A32D192ED03
    return np.uint64(z & _MASK64)


def _fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ForestConfig,
    *,
    w: np.ndarray | None = None,
    arm: np.ndarray | None = None,
    causal: bool = False,
    threads: int | None = None,
    feature_names: list[str] | None = None,
) -> Forest:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape[0] != n:
        raise DimensionError("target length does not match row count")
    if n < 2 or n < cfg.min_node_size:
        raise SizeError(
            f"need at least {max(2, cfg.min_node_size)} rows, got {n}"
        )
    mtry = cfg.resolve_mtry(p)
    sub_size = int(math.floor(cfg.subsample_fraction * n))
    if sub_size < 2:
        raise SizeError("subsample too small; increase subsample_fraction or n")
    w_arr = np.zeros(n) if w is None else np.ascontiguousarray(w, dtype=np.float64)
    arm_arr = (
        np.zeros(n, dtype=np.int64)
        if arm is None
        else np.ascontiguousarray(arm, dtype=np.int64)
    )

    def build(t: int) -> Tree:
        state = _tree_seed_state(cfg.seed, t)
        st = np.array([state], dtype=np.uint64)
        sub = _draw_subsample(st, n, sub_size)
        if cfg.honesty:
            half = sub_size // 2
            s_idx = np.sort(sub[:half])
            e_idx = np.sort(sub[half:])
        else:
            s_idx = np.sort(sub)
            e_idx = s_idx.copy()
        feat, thr, lft, rgt, val, ec = _grow_tree(
            X, y, w_arr, arm_arr, s_idx, e_idx, mtry, cfg.min_node_size,
            causal, st[0],
        )
        return Tree(feat, thr, lft, rgt, val, ec, np.sort(sub), s_idx, e_idx)

    n_jobs = default_threads() if threads is None else max(1, threads)
    if n_jobs == 1:
        trees = [build(t) for t in range(cfg.num_trees)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            trees = list(ex.map(build, range(cfg.num_trees)))
    return Forest(
        trees,
        cfg,
        n,
        p,
        kind="causal" if causal else "regression",
        feature_names=list(feature_names or []),
    )


def fit_regression_forest(
    X: np.ndarray,
    target: np.ndarray,
    cfg: ForestConfig,
    *,
    threads: int | None = None,
    feature_names: list[str] | None = None,
) -> Forest:
    """Fit an honest regression forest by greedy variance-reduction splits."""
    return _fit_forest(
        X, target, cfg, threads=threads, feature_names=feature_names
    )


def predict(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Mean of per-tree leaf estimates; X may be a single row or a matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    X = np.ascontiguousarray(X)
    if X.shape[1] != forest.p:
        raise DimensionError(
            f"query has {X.shape[1]} columns, forest trained on {forest.p}"
        )
    acc = np.zeros(X.shape[0])
    buf = np.empty(X.shape[0])
    for tree in forest.trees:
        _predict_tree(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            X, buf,
        )
        acc += buf
    return acc / len(forest.trees)


def predict_oob(forest: Forest, X_train: np.ndarray) -> np.ndarray:
    """Per-unit mean over trees whose subsample excluded the unit."""
    X = np.ascontiguousarray(np.asarray(X_train, dtype=np.float64))
    n = forest.n_train
    if X.shape != (n, forest.p):
        raise DimensionError("X_train must be the matrix the forest was fit on")
    acc = np.zeros(n)
    cnt = np.zeros(n)
    buf = np.empty(n)
    for tree in forest.trees:
        _predict_tree(
            tree.feature, tree.threshold, tree.left, tree.right, tree.value,
            X, buf,
        )
        oob = np.ones(n, dtype=bool)
        oob[tree.subsample] = False
        acc[oob] += buf[oob]
        cnt[oob] += 1.0
    if np.any(cnt == 0):
        bad = np.flatnonzero(cnt == 0)
        raise CoverageError(
            f"{bad.size} unit(s) have no out-of-bag trees (first: {bad[:5].tolist()}); "
            "increase num_trees or decrease subsample_fraction"
        )
    return acc / cnt


def variable_importance(forest: Forest) -> ImportanceReport:
    """Split-frequency importance: share of internal nodes per feature."""
    counts = np.zeros(forest.p, dtype=np.int64)
    for tree in forest.trees:
        internal = tree.feature[tree.feature >= 0]
        if internal.size:
            counts += np.bincount(internal, minlength=forest.p)
    total = counts.sum()
    shares = counts / total if total > 0 else np.zeros(forest.p)
    names = forest.feature_names or [f"x{i + 1}" for i in range(forest.p)]
    return ImportanceReport(counts, shares, names)


def forest_to_dict(forest: Forest) -> dict:
    leaf_key = "tau_hat" if forest.kind == "causal" else "estimate"
    trees = []
    for tree in forest.trees:
        nodes = []
        for i in range(tree.feature.shape[0]):
            if tree.feature[i] >= 0:
                nodes.append(
                    {
                        "split_feature": int(tree.feature[i]),
                        "split_threshold": float(tree.threshold[i]),
                        "left": int(tree.left[i]),
                        "right": int(tree.right[i]),
                    }
                )
            else:
                nodes.append(
                    {
                        leaf_key: float(tree.value[i]),
                        "estimation_count": int(tree.est_count[i]),
                    }
                )
        trees.append(
            {
                "nodes": nodes,
                "subsample": tree.subsample.tolist(),
                "structure_idx": tree.structure_idx.tolist(),
                "estimation_idx": tree.estimation_idx.tolist(),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": forest.kind,
        "n_train": forest.n_train,
        "p": forest.p,
        "feature_names": list(forest.feature_names),
        "config": {
            "num_trees": forest.config.num_trees,
            "subsample_fraction": forest.config.subsample_fraction,
            "honesty": forest.config.honesty,
            "mtry": forest.config.mtry,
            "min_node_size": forest.config.min_node_size,
            "seed": forest.config.seed,
        },
        "trees": trees,
    }


def forest_from_dict(doc: dict) -> Forest:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported forest schema version {doc.get('schema_version')}"
        )
    kind = doc["kind"]
    leaf_key = "tau_hat" if kind == "causal" else "estimate"
    cfg = ForestConfig(**doc["config"])
    trees = []
    for td in doc["trees"]:
        nodes = td["nodes"]
        k = len(nodes)
        feature = np.full(k, -1, np.int64)
        threshold = np.zeros(k)
        left = np.full(k, -1, np.int64)
        right = np.full(k, -1, np.int64)
        value = np.zeros(k)
        est_count = np.zeros(k, np.int64)
        for i, nd in enumerate(nodes):
            if "split_feature" in nd:
                feature[i] = nd["split_feature"]
                threshold[i] = nd["split_threshold"]
                left[i] = nd["left"]
                right[i] = nd["right"]
            else:
                value[i] = nd[leaf_key]
                est_count[i] = nd["estimation_count"]
        trees.append(
            Tree(
                feature,
                threshold,
                left,
                right,
                value,
                est_count,
                np.asarray(td["subsample"], dtype=np.int64),
                np.asarray(td["structure_idx"], dtype=np.int64),
                np.asarray(td["estimation_idx"], dtype=np.int64),
            )
        )
    return Forest(
        trees,
        cfg,
        doc["n_train"],
        doc["p"],
        kind=kind,
        feature_names=list(doc.get("feature_names", [])),
    )


def save_forest(forest: Forest, path: str) -> None:
    from .io_utils import atomic_write_text

    atomic_write_text(path, json.dumps(forest_to_dict(forest)))


def load_forest(path: str) -> Forest:
    with open(path, encoding="utf-8") as fh:
        return forest_from_dict(json.load(fh))
