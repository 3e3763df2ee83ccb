"""Command-line interface.

Subcommands: simulate, ate, fit, predict, evaluate (toc|qini|autoc-diff),
blp, risk, importance, run.  Usage errors exit with code 2 (argparse);
runtime errors write a machine-readable record to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .blp import best_linear_projection, modifier_correlations
from .cate import fit_causal_forest, predict_cate
from .data import DgpSpec, Dataset, load_csv, save_csv, simulate
from .effects import DrScores, ate_aipw, compute_dr_scores, difference_in_means
from .errors import HteForestError, ValidationError
from .evaluation import (
    PriorityRule,
    autoc_difference_test,
    autoc_test,
    fit_risk_model,
    qini_curve,
    toc_curve,
)
from .forest import (
    ForestConfig,
    fit_regression_forest,
    load_forest,
    predict,
    save_forest,
    variable_importance,
)
from .io_utils import write_csv, write_json
from .nuisance import estimate_nuisances
from .pipeline import RunConfig, run_from_manifest, run_pipeline

EXIT_OK = 0
EXIT_RUNTIME = 1
# argparse uses 2 for usage errors


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("HTEFOREST_THREADS", "1")),
        help="worker threads (never changes numeric output)",
    )
    p.add_argument("--out", default=None, help="output directory or file")
    return p


def _forest_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--num-trees", type=int, default=500)
    p.add_argument("--subsample-fraction", type=float, default=0.5)
    p.add_argument("--no-honesty", action="store_true")
    p.add_argument("--mtry", type=int, default=None)
    p.add_argument("--min-node-size", type=int, default=5)


def _forest_config(args, seed_offset: int = 0) -> ForestConfig:
    return ForestConfig(
        num_trees=args.num_trees,
        subsample_fraction=args.subsample_fraction,
        honesty=not args.no_honesty,
        mtry=args.mtry,
        min_node_size=args.min_node_size,
        seed=args.seed + seed_offset,
    )


def _data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--treatment-col", default="w")
    p.add_argument("--outcome-col", default="y")


def _read_table(path: str) -> tuple[list[str], np.ndarray]:
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(c) for c in row] for row in reader]
    return header, np.asarray(rows, dtype=np.float64)


def _column(header: list[str], mat: np.ndarray, name: str) -> np.ndarray:
    if name not in header:
        raise ValidationError(f"column {name!r} not found")
    return mat[:, header.index(name)]


def _require_out(args) -> str:
    if not args.out:
        raise ValidationError("--out is required for this command")
    os.makedirs(args.out, exist_ok=True)
    return args.out


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="hteforest",
        description="Estimate and evaluate heterogeneous treatment effects.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset")
    p.add_argument("--scenario", required=True,
                   choices=("rct", "confounded", "null_effect"))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--p", type=int, default=10)

    p = sub.add_parser("ate", parents=[common], help="average treatment effect")
    _data_flags(p)
    _forest_flags(p)
    p.add_argument("--method", choices=("diff-means", "aipw"), default="aipw")
    p.add_argument("--known-propensity", default=None)
    p.add_argument("--clip-eps", type=float, default=0.01)

    p = sub.add_parser("fit", parents=[common], help="fit a causal forest")
    _data_flags(p)
    _forest_flags(p)
    p.add_argument("--known-propensity", default=None)
    p.add_argument("--clip-eps", type=float, default=0.01)

    p = sub.add_parser("predict", parents=[common],
                       help="predict from a saved forest")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--treatment-col", default="w")
    p.add_argument("--outcome-col", default="y")

    p = sub.add_parser("evaluate", parents=[common],
                       help="rank-based evaluation of a priority rule")
    p.add_argument("curve", choices=("toc", "qini", "autoc-diff"))
    p.add_argument("--scores", required=True, help="CSV with gamma and rule columns")
    p.add_argument("--gamma-col", default="gamma")
    p.add_argument("--rule-col", default="rule")
    p.add_argument("--rule-col-b", default=None)
    p.add_argument("--bootstrap-B", type=int, default=200)

    p = sub.add_parser("blp", parents=[common], help="best linear projection")
    p.add_argument("--scores", required=True)
    p.add_argument("--gamma-col", default="gamma")
    p.add_argument("--modifiers", required=True,
                   help="comma-separated modifier column names")

    p = sub.add_parser("risk", parents=[common],
                       help="fit a single-arm outcome (risk) forest")
    _data_flags(p)
    _forest_flags(p)
    p.add_argument("--arm", type=int, default=0)

    p = sub.add_parser("importance", parents=[common],
                       help="split-frequency variable importance")
    _data_flags(p)
    _forest_flags(p)
    p.add_argument("--target", choices=("outcome", "treatment"), default="outcome")

    p = sub.add_parser("run", parents=[common], help="full pipeline")
    p.add_argument("--input", default=None)
    p.add_argument("--scenario", default=None,
                   choices=("rct", "confounded", "null_effect"))
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--treatment-col", default="w")
    p.add_argument("--outcome-col", default="y")
    p.add_argument("--train-fraction", type=float, default=0.6)
    _forest_flags(p)
    p.add_argument("--known-propensity", default=None)
    p.add_argument("--clip-eps", type=float, default=0.01)
    p.add_argument("--num-groups", type=int, default=4)
    p.add_argument("--bootstrap-B", type=int, default=200)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--forest-seed", type=int, default=None)
    p.add_argument("--bootstrap-seed", type=int, default=None)
    p.add_argument("--modifiers", default=None)
    p.add_argument("--risk-arm", type=int, default=0)
    p.add_argument("--risk-invert", action="store_true")
    p.add_argument("--prescreen", action="store_true")
    p.add_argument("--prescreen-percentile", type=float, default=0.75)
    p.add_argument("--from-manifest", default=None,
                   help="re-run a previous configuration")

    return parser


def _cmd_simulate(args) -> int:
    out = _require_out(args)
    ds, true_tau, true_ate = simulate(
        DgpSpec(n=args.n, p=args.p, scenario=args.scenario, seed=args.seed)
    )
    save_csv(ds, os.path.join(out, "simulated.csv"))
    write_json(
        os.path.join(out, "truth.json"),
        {"true_ate": true_ate, "true_tau": [float(t) for t in true_tau]},
    )
    print(f"wrote {out}/simulated.csv (n={ds.n}, p={ds.p}), true ATE {true_ate:.5f}")
    return EXIT_OK


def _cmd_ate(args) -> int:
    ds = load_csv(args.input, args.treatment_col, args.outcome_col)
    if args.method == "diff-means":
        res = difference_in_means(ds)
    else:
        nz = estimate_nuisances(
            ds,
            _forest_config(args),
            known_propensity=(
                float(args.known_propensity)
                if args.known_propensity is not None
                else None
            ),
            clip_eps=args.clip_eps,
            threads=args.threads,
        )
        model = fit_causal_forest(ds, nz, _forest_config(args, 10),
                                  threads=args.threads)
        from .cate import predict_cate_oob

        tau = predict_cate_oob(model, ds)
        res = ate_aipw(compute_dr_scores(ds, nz, tau))
    print(f"estimate: {res.estimate:.5f}")
    print(f"std_error: {res.std_error:.5f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "ate.json"), res.to_dict())
    return EXIT_OK


def _cmd_fit(args) -> int:
    out = _require_out(args)
    ds = load_csv(args.input, args.treatment_col, args.outcome_col)
    nz = estimate_nuisances(
        ds,
        _forest_config(args),
        known_propensity=(
            float(args.known_propensity)
            if args.known_propensity is not None
            else None
        ),
        clip_eps=args.clip_eps,
        threads=args.threads,
    )
    model = fit_causal_forest(ds, nz, _forest_config(args, 10), threads=args.threads)
    path = os.path.join(out, "model.json")
    save_forest(model.forest, path)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    out = _require_out(args)
    forest = load_forest(args.model)
    header, mat = _read_table(args.input)
    names = forest.feature_names
    if names and all(n in header for n in names):
        X = np.column_stack([_column(header, mat, n) for n in names])
    else:
        drop = {args.treatment_col, args.outcome_col}
        cols = [i for i, h in enumerate(header) if h not in drop]
        X = mat[:, cols]
    pred = predict(forest, X)
    colname = "cate" if forest.kind == "causal" else "prediction"
    path = os.path.join(out, "predictions.csv")
    write_csv(path, ["row", colname], [list(range(len(pred))), pred.tolist()])
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    out = _require_out(args)
    header, mat = _read_table(args.scores)
    gamma = _column(header, mat, args.gamma_col)
    scores = DrScores(gamma)
    rule = PriorityRule(args.rule_col, _column(header, mat, args.rule_col))
    if args.curve == "toc":
        curve = toc_curve(scores, rule, args.bootstrap_B, args.seed)
        test = autoc_test(curve)
        write_csv(
            os.path.join(out, "toc.csv"),
            ["grid", "value", "se"],
            [curve.grid.tolist(), curve.values.tolist(),
             curve.pointwise_se.tolist()],
        )
        envelope = {
            "kind": "toc",
            "summary": curve.summary,
            "summary_se": curve.summary_se,
            "t_value": test.t_value,
            "p_value": test.p_value,
            "bootstrap": curve.bootstrap,
        }
        write_json(os.path.join(out, "toc.json"), envelope)
        print(f"AUTOC: {curve.summary:.5f} (SE {curve.summary_se:.5f}, "
              f"p {test.p_value:.4f})")
    elif args.curve == "qini":
        curve = qini_curve(scores, rule, args.bootstrap_B, args.seed)
        write_csv(
            os.path.join(out, "qini.csv"),
            ["grid", "value", "se", "baseline"],
            [curve.grid.tolist(), curve.values.tolist(),
             curve.pointwise_se.tolist(), curve.baseline.tolist()],
        )
        write_json(
            os.path.join(out, "qini.json"),
            {
                "kind": "qini",
                "summary": curve.summary,
                "summary_se": curve.summary_se,
                "bootstrap": curve.bootstrap,
            },
        )
        print(f"Qini(n): {curve.summary:.5f} (SE {curve.summary_se:.5f})")
    else:  # autoc-diff
        if not args.rule_col_b:
            raise ValidationError("autoc-diff needs --rule-col-b")
        rule_b = PriorityRule(args.rule_col_b, _column(header, mat, args.rule_col_b))
        test = autoc_difference_test(scores, rule, rule_b, args.bootstrap_B, args.seed)
        write_json(os.path.join(out, "autoc_diff.json"), test.to_dict())
        print(f"AUTOC difference: {test.autoc:.5f} (SE {test.se:.5f}, "
              f"p {test.p_value:.4f})")
    return EXIT_OK


def _cmd_blp(args) -> int:
    out = _require_out(args)
    header, mat = _read_table(args.scores)
    gamma = _column(header, mat, args.gamma_col)
    names = [m.strip() for m in args.modifiers.split(",") if m.strip()]
    Z = np.column_stack([_column(header, mat, n) for n in names])
    res = best_linear_projection(DrScores(gamma), Z, names)
    corr = modifier_correlations(Z)
    rows = res.to_dict()["rows"]
    write_csv(
        os.path.join(out, "blp.csv"),
        ["name", "coefficient", "hc3_se", "t_value", "p_value"],
        [
            [r["name"] for r in rows],
            [r["coefficient"] for r in rows],
            [r["hc3_se"] for r in rows],
            [r["t_value"] for r in rows],
            [r["p_value"] for r in rows],
        ],
    )
    write_json(
        os.path.join(out, "blp.json"),
        {
            "blp": res.to_dict(),
            "correlations": {
                "names": names,
                "matrix": [[float(v) for v in row] for row in corr],
            },
        },
    )
    for r in rows:
        print(f"{r['name']}: {r['coefficient']:.5f} (SE {r['hc3_se']:.5f})")
    return EXIT_OK


def _cmd_risk(args) -> int:
    out = _require_out(args)
    ds = load_csv(args.input, args.treatment_col, args.outcome_col)
    forest = fit_risk_model(ds, args.arm, _forest_config(args), threads=args.threads)
    path = os.path.join(out, "risk_model.json")
    save_forest(forest, path)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_importance(args) -> int:
    ds = load_csv(args.input, args.treatment_col, args.outcome_col)
    target = ds.outcome if args.target == "outcome" else ds.treatment
    forest = fit_regression_forest(
        ds.covariates, target, _forest_config(args), threads=args.threads,
        feature_names=ds.column_names,
    )
    report = variable_importance(forest)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "importance.json"), report.to_dict())
    for name, share in zip(report.feature_names, report.shares):
        print(f"{name}: {share:.4f}")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.from_manifest:
        manifest = run_from_manifest(args.from_manifest)
        print(f"re-ran pipeline into {manifest['config']['out_dir']}")
        return EXIT_OK
    out = _require_out(args)
    cfg = RunConfig(
        input_path=args.input,
        scenario=args.scenario,
        n=args.n,
        p=args.p,
        treatment_col=args.treatment_col,
        outcome_col=args.outcome_col,
        train_fraction=args.train_fraction,
        num_trees=args.num_trees,
        subsample_fraction=args.subsample_fraction,
        honesty=not args.no_honesty,
        mtry=args.mtry,
        min_node_size=args.min_node_size,
        known_propensity=args.known_propensity,
        clip_eps=args.clip_eps,
        num_groups=args.num_groups,
        bootstrap_B=args.bootstrap_B,
        split_seed=args.split_seed if args.split_seed is not None else args.seed,
        forest_seed=(
            args.forest_seed if args.forest_seed is not None else args.seed + 1
        ),
        bootstrap_seed=(
            args.bootstrap_seed if args.bootstrap_seed is not None else args.seed + 2
        ),
        out_dir=out,
        modifiers=(
            [m.strip() for m in args.modifiers.split(",") if m.strip()]
            if args.modifiers
            else []
        ),
        risk_arm=args.risk_arm,
        risk_invert=args.risk_invert,
        prescreen=args.prescreen,
        prescreen_percentile=args.prescreen_percentile,
        threads=args.threads,
    )
    run_pipeline(cfg)
    print(f"pipeline complete; results in {out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ate": _cmd_ate,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "blp": _cmd_blp,
    "risk": _cmd_risk,
    "importance": _cmd_importance,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except HteForestError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(
            json.dumps({"error": "OSError", "message": str(exc)}), file=sys.stderr
        )
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
