"""Batch orchestration: run the whole estimation/evaluation workflow and
write machine-readable plot data plus a reproducibility manifest."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .blp import best_linear_projection, modifier_correlations
from .cate import fit_causal_forest, predict_cate, predict_cate_oob, prescreen_covariates
from .data import Dataset, DgpSpec, load_csv, simulate, split_train_test
from .effects import ate_aipw, compute_dr_scores, difference_in_means, group_ates
from .errors import ValidationError
from .evaluation import (
    PriorityRule,
    autoc_difference_test,
    autoc_test,
    fit_risk_model,
    qini_curve,
    toc_curve,
)
from .forest import ForestConfig, predict
from .io_utils import write_csv, write_json
from .nuisance import estimate_nuisances, overlap_report

RESULT_FILES = (
    "overlap.json",
    "ate.json",
    "quartile_ates.json",
    "cate_test.csv",
    "toc_cate.csv",
    "toc_risk.csv",
    "qini.csv",
    "evaluation.json",
    "blp.json",
)
MANIFEST_FILE = "manifest.json"

# per-stage forest seed offsets, all derived from the single forests seed
_SEED_TRAIN_NUISANCE = 0
_SEED_TRAIN_CAUSAL = 10
_SEED_TEST_NUISANCE = 20
_SEED_TEST_CAUSAL = 30
_SEED_RISK = 40


@dataclass
class RunConfig:
    input_path: str | None = None
    scenario: str | None = None
    n: int = 2000
    p: int = 10
    treatment_col: str = "w"
    outcome_col: str = "y"
    train_fraction: float = 0.6
    num_trees: int = 500
    subsample_fraction: float = 0.5
    honesty: bool = True
    mtry: int | None = None
    min_node_size: int = 5
    known_propensity: str | None = None  # numeric literal or column name
    clip_eps: float = 0.01
    num_groups: int = 4
    bootstrap_B: int = 200
    split_seed: int = 1
    forest_seed: int = 2
    bootstrap_seed: int = 3
    out_dir: str = "out"
    modifiers: list[str] = field(default_factory=list)
    risk_arm: int = 0
    risk_invert: bool = False
    prescreen: bool = False
    prescreen_percentile: float = 0.75
    threads: int = 1

    def __post_init__(self):
        if (self.input_path is None) == (self.scenario is None):
            raise ValidationError(
                "exactly one of input_path / scenario must be specified"
            )

    def forest_config(self, seed_offset: int) -> ForestConfig:
        return ForestConfig(
            num_trees=self.num_trees,
            subsample_fraction=self.subsample_fraction,
            honesty=self.honesty,
            mtry=self.mtry,
            min_node_size=self.min_node_size,
            seed=self.forest_seed + seed_offset,
        )


def _load_dataset(cfg: RunConfig) -> tuple[Dataset, np.ndarray | float | None]:
    """Returns the dataset and, when requested, the supplied propensity."""
    if cfg.scenario is not None:
        ds, _, _ = simulate(
            DgpSpec(n=cfg.n, p=cfg.p, scenario=cfg.scenario, seed=cfg.split_seed)
        )
    else:
        ds = load_csv(cfg.input_path, cfg.treatment_col, cfg.outcome_col)
    known = None
    if cfg.known_propensity is not None:
        try:
            known = float(cfg.known_propensity)
        except ValueError:
            name = cfg.known_propensity
            if name not in ds.column_names:
                raise ValidationError(
                    f"known-propensity column {name!r} not found"
                ) from None
            j = ds.column_names.index(name)
            known = ds.covariates[:, j].copy()
            keep = [i for i in range(ds.p) if i != j]
            ds = ds.select_columns(np.asarray(keep))
    return ds, known


def _curve_csv(path: str, curve) -> None:
    cols = [curve.grid.tolist(), curve.values.tolist(), curve.pointwise_se.tolist()]
    header = ["grid", "value", "se"]
    if curve.baseline is not None:
        header.append("baseline")
        cols.append(curve.baseline.tolist())
    write_csv(path, header, cols)


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute the full workflow and write all result files to cfg.out_dir."""
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    threads = cfg.threads

    ds, known = _load_dataset(cfg)
    split = split_train_test(ds, cfg.train_fraction, cfg.split_seed)
    train = ds.subset(split.train_idx)
    test = ds.subset(split.test_idx)
    known_train = known[split.train_idx] if isinstance(known, np.ndarray) else known
    known_test = known[split.test_idx] if isinstance(known, np.ndarray) else known

    # covariate pre-screen (conditional-mean importance on the training part)
    if cfg.prescreen:
        keep = prescreen_covariates(
            train,
            cfg.forest_config(_SEED_TRAIN_NUISANCE),
            cfg.prescreen_percentile,
            threads=threads,
        )
    else:
        keep = np.arange(ds.p)
    kept_names = [ds.column_names[i] for i in keep]

    # nuisances and overlap, train and test separately
    nz_train = estimate_nuisances(
        train,
        cfg.forest_config(_SEED_TRAIN_NUISANCE),
        known_propensity=known_train,
        clip_eps=cfg.clip_eps,
        threads=threads,
    )
    nz_test = estimate_nuisances(
        test,
        cfg.forest_config(_SEED_TEST_NUISANCE),
        known_propensity=known_test,
        clip_eps=cfg.clip_eps,
        threads=threads,
    )
    write_json(
        os.path.join(out, "overlap.json"),
        {
            "train": overlap_report(nz_train).to_dict(),
            "test": overlap_report(nz_test).to_dict(),
        },
    )

    # CATE model on the training part, predictions on the held-out part
    model = fit_causal_forest(
        train.select_columns(keep),
        nz_train,
        cfg.forest_config(_SEED_TRAIN_CAUSAL),
        threads=threads,
    )
    cate_test = predict_cate(model, test.covariates[:, keep])

    # separate test-set causal forest supplies the out-of-fold tau for scoring
    test_model = fit_causal_forest(
        test.select_columns(keep),
        nz_test,
        cfg.forest_config(_SEED_TEST_CAUSAL),
        threads=threads,
    )
    tau_oob_test = predict_cate_oob(test_model, test.select_columns(keep))
    dr = compute_dr_scores(test, nz_test, tau_oob_test)

    ate = ate_aipw(dr)
    write_json(
        os.path.join(out, "ate.json"),
        {
            "diff_means_full_sample": difference_in_means(ds).to_dict(),
            "aipw_test_set": ate.to_dict(),
        },
    )

    groups = group_ates(dr, cate_test, cfg.num_groups)
    write_json(
        os.path.join(out, "quartile_ates.json"),
        {
            "num_groups": cfg.num_groups,
            "priority": "cate_prediction",
            "groups": [g.to_dict() for g in groups],
        },
    )

    write_csv(
        os.path.join(out, "cate_test.csv"),
        ["row", "cate", "gamma"],
        [split.test_idx.tolist(), cate_test.tolist(), dr.gamma.tolist()],
    )

    cate_rule = PriorityRule("cate", cate_test)
    toc_cate = toc_curve(dr, cate_rule, cfg.bootstrap_B, cfg.bootstrap_seed)
    _curve_csv(os.path.join(out, "toc_cate.csv"), toc_cate)
    cate_autoc = autoc_test(toc_cate)

    qini = qini_curve(dr, cate_rule, cfg.bootstrap_B, cfg.bootstrap_seed)
    _curve_csv(os.path.join(out, "qini.csv"), qini)

    # risk model on the training arm subset, evaluated on the test part
    risk_forest = fit_risk_model(
        train, cfg.risk_arm, cfg.forest_config(_SEED_RISK), threads=threads
    )
    risk_pred = predict(risk_forest, test.covariates)
    risk_scores = risk_pred if cfg.risk_invert else -risk_pred
    risk_rule = PriorityRule("risk", risk_scores)
    toc_risk = toc_curve(dr, risk_rule, cfg.bootstrap_B, cfg.bootstrap_seed)
    _curve_csv(os.path.join(out, "toc_risk.csv"), toc_risk)
    risk_autoc = autoc_test(toc_risk)
    diff_test = autoc_difference_test(
        dr, cate_rule, risk_rule, cfg.bootstrap_B, cfg.bootstrap_seed
    )

    write_json(
        os.path.join(out, "evaluation.json"),
        {
            "toc_cate": cate_autoc.to_dict(),
            "toc_risk": risk_autoc.to_dict(),
            "autoc_difference_cate_minus_risk": diff_test.to_dict(),
            "qini": {
                "summary": float(qini.summary),
                "summary_se": float(qini.summary_se),
            },
            "bootstrap": {"B": cfg.bootstrap_B, "seed": cfg.bootstrap_seed},
        },
    )

    # best linear projection on the configured modifiers (test set)
    modifiers = cfg.modifiers or kept_names[: min(len(kept_names), 8)]
    missing = [m for m in modifiers if m not in ds.column_names]
    if missing:
        raise ValidationError(f"modifier column(s) not found: {missing}")
    zcols = [ds.column_names.index(m) for m in modifiers]
    Z = test.covariates[:, zcols]
    blp = best_linear_projection(dr, Z, modifiers)
    corr = modifier_correlations(Z) if len(modifiers) >= 1 else None
    write_json(
        os.path.join(out, "blp.json"),
        {
            "blp": blp.to_dict(),
            "correlations": {
                "names": modifiers,
                "matrix": [[float(v) for v in row] for row in corr],
            },
        },
    )

    manifest = {
        "library": "hteforest",
        "version": __version__,
        "config": asdict(cfg),
        "seeds": {
            "split": cfg.split_seed,
            "forests": cfg.forest_seed,
            "bootstrap": cfg.bootstrap_seed,
        },
        "prescreen_kept": kept_names,
        "outputs": list(RESULT_FILES),
    }
    write_json(os.path.join(out, MANIFEST_FILE), manifest)
    return manifest


def run_from_manifest(path: str) -> dict:
    import json

    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    return run_pipeline(RunConfig(**manifest["config"]))
