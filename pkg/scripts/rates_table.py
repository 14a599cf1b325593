"""Log-log slopes of every rate statistic on one n grid.

    python scripts/rates_table.py --replications 500 --out results/rates

Writes one CSV and summary per statistic under ``--out`` and prints a table of
medians, slope and standard error.
"""

import argparse
from pathlib import Path

from grenander.harness import DEFAULT_N_GRID, ExperimentConfig, run_experiment

LINEAR = {"family": "linear", "a": 1.5, "b": 1.0}
LINEAR2 = {"family": "linear", "a": 0.75, "b": 0.25, "alpha1": 2.0}
STEP = {"family": "stepJump", "breaks": [0, 0.5, 1], "heights": [1.5, 0.5]}

EXPERIMENTS = {
    "l2Error": {"density": LINEAR},
    "hellingerError": {"density": LINEAR},
    "supDiffCdf": {"density": LINEAR},
    "scoreSelf": {"density": LINEAR},
    "pluginMinusEmpirical": {"density": STEP, "functionals": [{"kind": "indicator", "t": 0.5}]},
    "convolutionTerms": {"density": LINEAR, "density2": LINEAR2},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20150626)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--n-grid", default=",".join(map(str, DEFAULT_N_GRID)))
    ap.add_argument("--only", nargs="*", choices=sorted(EXPERIMENTS))
    ap.add_argument("--out", default="results/rates")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = [int(v) for v in args.n_grid.split(",")]
    print(f"{'statistic':<22}{'slope':>9}{'stderr':>9}  medians")
    for stat in args.only or EXPERIMENTS:
        cfg = ExperimentConfig.from_dict({"statistic": stat, "n_grid": grid, "replications": args.replications,
                                          "base_seed": args.seed, "workers": args.workers, **EXPERIMENTS[stat]})
        res = run_experiment(cfg)
        res.write_csv(out / f"{stat}.csv")
        res.write_summary(out / f"{stat}_summary.json")
        s = res.summary()
        meds = " ".join(f"{m:.3g}" for m in res.medians())
        print(f"{stat:<22}{s['slope']:>9.4f}{s['stderr']:>9.4f}  {meds}", flush=True)


if __name__ == "__main__":
    main()
