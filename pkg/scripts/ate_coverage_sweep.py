#!/usr/bin/env python3
"""Monte-Carlo sanity sweep: does the AIPW confidence interval cover the
true average effect at its nominal rate on simulated trials?

Usage:
    python3 scripts/ate_coverage_sweep.py [--reps 50] [--n 2000]
"""

import argparse
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from hteforest import (  # noqa: E402
    DgpSpec,
    ForestConfig,
    ate_aipw,
    compute_dr_scores,
    estimate_nuisances,
    fit_causal_forest,
    predict_cate_oob,
    simulate,
)


def one_rep(scenario, n, trees, seed):
    ds, _, true_ate = simulate(DgpSpec(n=n, p=5, scenario=scenario, seed=seed))
    known = 0.5 if scenario == "rct" else None
    nz = estimate_nuisances(
        ds, ForestConfig(num_trees=trees, seed=10 * seed), known_propensity=known
    )
    model = fit_causal_forest(ds, nz, ForestConfig(num_trees=trees, seed=10 * seed + 1))
    tau = predict_cate_oob(model, ds)
    res = ate_aipw(compute_dr_scores(ds, nz, tau))
    covered = res.ci_low <= true_ate <= res.ci_high
    return res.estimate, true_ate, covered


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--trees", type=int, default=100)
    ap.add_argument("--scenario", default="rct",
                    choices=["rct", "confounded", "null_effect"])
    args = ap.parse_args(argv)

    errors = []
    hits = 0
    for seed in range(args.reps):
        est, truth, covered = one_rep(args.scenario, args.n, args.trees, seed)
        errors.append(est - truth)
        hits += covered
    errors = np.asarray(errors)
    print(f"scenario={args.scenario}  n={args.n}  reps={args.reps}")
    print(f"bias       : {errors.mean():+.5f}")
    print(f"rmse       : {np.sqrt(np.mean(errors**2)):.5f}")
    print(f"95% CI coverage: {hits}/{args.reps}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
