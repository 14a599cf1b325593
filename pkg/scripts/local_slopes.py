"""Slopes between consecutive grid points for one rate statistic.

    python scripts/local_slopes.py --config docs/configs/convolution_rate.json --n-grid 100,316,1000,3162,10000,31623

A single least-squares slope can hide curvature in log median vs log n; the
local slopes show whether the exponent is still drifting at the top of the grid.
"""

import argparse
import json

import numpy as np

from grenander.harness import ExperimentConfig, fit_loglog, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True)
    ap.add_argument("--n-grid")
    ap.add_argument("--replications", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    with open(args.config) as fh:
        raw = json.load(fh)
    if args.n_grid:
        raw["n_grid"] = [int(v) for v in args.n_grid.split(",")]
    if args.replications:
        raw["replications"] = args.replications
    raw["workers"] = args.workers
    res = run_experiment(ExperimentConfig.from_dict(raw))
    ns = np.asarray(res.n_grid, dtype=float)
    med = res.medians()
    local = np.diff(np.log(med)) / np.diff(np.log(ns))
    for k, n in enumerate(res.n_grid):
        tail = f"{local[k - 1]:>9.4f}" if k else " " * 9
        print(f"{n:>8}{med[k]:>12.4g}{tail}")
    if ns.size >= 3:
        slope, se = fit_loglog(ns, med)
        print(f"overall slope {slope:.4f} +/- {se:.4f}")
        if "young_violations" in res.summary():
            print(f"young violations {res.summary()['young_violations']}")


if __name__ == "__main__":
    main()
