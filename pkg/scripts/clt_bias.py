"""Mean, variance and KS distance of the plug-in CLT statistic across n.

    python scripts/clt_bias.py --function cos2pi --n-grid 1000,10000,100000

The plug-in mean has a bias of order n^(1/2) E(F_hat - F_n), which shrinks
slowly. This prints mean/sigma next to the KS distance so the two can be
compared at each n.
"""

import argparse
import math

from grenander.harness import ExperimentConfig, run_experiment

DENSITIES = {
    "linear": {"family": "linear", "a": 1.5, "b": 1.0},
    "stepJump": {"family": "stepJump", "breaks": [0, 0.5, 1], "heights": [1.5, 0.5]},
    "truncExp": {"family": "truncExp", "rate": 1.0, "alpha1": 1.0},
}


def functional(name):
    if name.startswith("indicator:"):
        return {"kind": "indicator", "t": float(name.split(":")[1])}
    return {"kind": "hoelder", "name": name}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--density", choices=sorted(DENSITIES), default="linear")
    ap.add_argument("--function", default="cos2pi", help="cos2pi, identity, abspow or indicator:T")
    ap.add_argument("--n-grid", default="1000,3162,10000,31623")
    ap.add_argument("--replications", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20150626)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict({
        "statistic": "cltStatistic",
        "density": DENSITIES[args.density],
        "functionals": [functional(args.function)],
        "n_grid": [int(v) for v in args.n_grid.split(",")],
        "replications": args.replications,
        "base_seed": args.seed,
        "workers": args.workers,
    })
    res = run_experiment(cfg)
    sigma = res.reference_sigma()
    print(f"limit variance {sigma ** 2:.5f}")
    print(f"{'n':>8}{'mean':>10}{'mean/sd':>10}{'var':>10}{'KS':>8}")
    for row in res.aggregates():
        print(f"{row['n']:>8}{row['mean']:>10.4f}{row['mean'] / sigma:>10.4f}{row['variance']:>10.4f}"
              f"{row['ks']:>8.4f}")
    means = [row["mean"] for row in res.aggregates()]
    ns = cfg.n_grid
    if len(ns) > 1 and all(m > 0 for m in means):
        rate = math.log(means[-1] / means[0]) / math.log(ns[-1] / ns[0])
        print(f"mean decays like n^{rate:.3f} between n={ns[0]} and n={ns[-1]}")


if __name__ == "__main__":
    main()
