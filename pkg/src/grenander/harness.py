"""Seeded Monte Carlo experiments over a grid of sample sizes.

Replication ``r`` at sample size ``n`` draws from the Philox stream keyed by
``(base_seed, n, r)`` (and ``(base_seed, n, r, 1)`` for a second, independent
sample), so results do not depend on worker count or execution order.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from .convolution import decomposition_terms
from .densities import density_from_config, sample_iid
from .errors import ConfigurationError, DegenerateStatisticError, DistributionMismatchError
from .estimator import fit_with_majorant
from .likelihood import (
    clt_statistic,
    functional_from_config,
    limit_variance,
    plugin_minus_empirical,
    score_self,
)
from .metrics import hellinger, l2_distance, sup_diff_cdf

STATISTICS = (
    "supDiffCdf",
    "pluginMinusEmpirical",
    "cltStatistic",
    "l2Error",
    "hellingerError",
    "scoreSelf",
    "tailLaw",
    "convolutionTerms",
)
RATE_STATISTICS = {"supDiffCdf", "pluginMinusEmpirical", "l2Error", "hellingerError", "scoreSelf", "convolutionTerms"}
DEFAULT_N_GRID = (100, 316, 1000, 3162, 10000)
QUANTILES = (0.1, 0.9)


@dataclass
class ExperimentConfig:
    statistic: str
    density: dict
    functionals: list = field(default_factory=list)
    n_grid: list = field(default_factory=lambda: list(DEFAULT_N_GRID))
    replications: int = 500
    base_seed: int = 0
    thresholds: list = field(default_factory=list)
    density2: Optional[dict] = None
    coupled: bool = False
    workers: int = 1
    acceptance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.statistic not in STATISTICS:
            raise ConfigurationError(f"unknown statistic {self.statistic!r}; choose from {', '.join(STATISTICS)}")
        self.n_grid = [int(n) for n in self.n_grid]
        if not self.n_grid or any(n < 1 for n in self.n_grid) or self.n_grid != sorted(set(self.n_grid)):
            raise ConfigurationError("n_grid must be a strictly ascending list of positive sizes")
        if int(self.replications) < 1:
            raise ConfigurationError("replications must be positive")
        self.replications = int(self.replications)
        self.workers = max(1, int(self.workers))
        # parse eagerly so malformed specs fail before any work
        self.reference()
        self.functions()
        if self.density2 is not None:
            density_from_config(self.density2)

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        aliases = {"nGrid": "n_grid", "baseSeed": "base_seed", "seed": "base_seed", "R": "replications"}
        clean = {}
        for k, v in d.items():
            k = aliases.get(k, k)
            if k not in known:
                raise ConfigurationError(f"unknown config key {k!r}")
            clean[k] = v
        for req in ("statistic", "density"):
            if req not in clean:
                raise ConfigurationError(f"config is missing {req!r}")
        return cls(**clean)

    def to_dict(self):
        return asdict(self)

    def reference(self):
        return _density(json.dumps(self.density, sort_keys=True))

    def reference2(self):
        if self.density2 is None:
            return self.reference()
        return _density(json.dumps(self.density2, sort_keys=True))

    def functions(self):
        d = self.reference()
        return [functional_from_config(f, d) for f in self.functionals]


@lru_cache(maxsize=32)
def _density(key):
    return density_from_config(json.loads(key))


def check_hypotheses(cfg):
    """Reject (density, statistic, functional) combinations no theorem covers.

    Raises :class:`ConfigurationError` with ``hypothesis`` naming the assumption.
    """
    d = cfg.reference()
    fs = cfg.functions()
    if cfg.statistic in ("pluginMinusEmpirical", "cltStatistic"):
        if not fs:
            raise ConfigurationError(f"{cfg.statistic} needs at least one functional")
        if cfg.statistic == "cltStatistic" and len(fs) != 1:
            raise ConfigurationError("cltStatistic takes exactly one functional")
        for f in fs:
            if f.kind == "hoelder" and f.derivative_sup != 0 and not d.strict_curvature:
                raise ConfigurationError(
                    f"{f.name} under {d.family}: Hoelder-ball CLT requires strict curvature "
                    "(||lambda/Dp0||_inf < inf); p0 has flat parts",
                    hypothesis="strict curvature ||lambda/Dp0||_inf < inf (Hoelder-ball uniform CLT)",
                )
            if f.kind in ("indicator", "bv") and f.df_over_dp0(d) is None:
                raise ConfigurationError(
                    f"{f.name} under {d.family}: Df is not absolutely continuous w.r.t. Dp0 "
                    "(indicators need a discontinuity of p0 at t)",
                    hypothesis="||Df/Dp0||_{inf,Dp0} < inf (bounded-variation class B)",
                )
    if cfg.statistic == "tailLaw" and not cfg.thresholds:
        raise ConfigurationError("tailLaw needs at least one threshold M")
    if cfg.statistic == "convolutionTerms":
        if cfg.coupled and cfg.density2 is not None and cfg.reference2() != d:
            raise ConfigurationError(
                "coupled convolution (X_j = Y_j) needs identical densities",
                hypothesis="X and Y identically distributed for the one-sample convolution",
            )


def primary_series(statistic):
    return "crossTerm" if statistic == "convolutionTerms" else statistic


def replicate(cfg, n, r):
    """Statistic value(s) for one ``(n, r)`` cell as a dict of series name -> float."""
    d = cfg.reference()
    s = sample_iid(d, n, cfg.base_seed, n, r)
    p_hat, M, F = fit_with_majorant(s)
    stat = cfg.statistic
    if stat == "supDiffCdf":
        return {stat: sup_diff_cdf(M, F)}
    if stat == "pluginMinusEmpirical":
        return {stat: max(abs(plugin_minus_empirical(p_hat, s, f)) for f in cfg.functions())}
    if stat == "cltStatistic":
        return {stat: clt_statistic(p_hat, d, cfg.functions()[0], n)}
    if stat == "l2Error":
        return {stat: l2_distance(p_hat, d)}
    if stat == "hellingerError":
        return {stat: hellinger(p_hat, d)}
    if stat == "scoreSelf":
        v = score_self(s, d, p_hat)
        return {stat: abs(v), "scoreSelfSigned": v}
    if stat == "tailLaw":
        return {stat: float(p_hat.values[0])}
    # convolutionTerms
    d2 = cfg.reference2()
    if cfg.coupled:
        q_hat = p_hat
    else:
        q_hat, _, _ = fit_with_majorant(sample_iid(d2, n, cfg.base_seed, n, r, 1))
    t = decomposition_terms(p_hat, q_hat, d, d2)
    return {"crossTerm": t.cross, "youngBound": t.young_bound, "firstTerm": t.first, "secondTerm": t.second}


def _run_chunk(payload):
    cfg_dict, tasks = payload
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return [(i, r, replicate(cfg, n, r)) for i, n, r in tasks]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    series: dict

    @property
    def n_grid(self):
        return list(self.config.n_grid)

    @property
    def primary(self):
        return self.series[primary_series(self.config.statistic)]

    def medians(self, name=None):
        vals = self.series[name] if name else self.primary
        return np.median(vals, axis=1)

    def reference_sigma(self):
        if self.config.statistic != "cltStatistic":
            return None
        return math.sqrt(max(limit_variance(self.config.functions()[0], self.config.reference()), 0.0))

    def aggregates(self):
        rows = []
        sigma = self.reference_sigma()
        for i, n in enumerate(self.config.n_grid):
            v = self.primary[i]
            row = {
                "n": n,
                "median": float(np.median(v)),
                "q10": float(np.quantile(v, QUANTILES[0])),
                "q90": float(np.quantile(v, QUANTILES[1])),
                "mean": float(np.mean(v)),
                "variance": float(np.var(v, ddof=1)) if v.size > 1 else 0.0,
            }
            if sigma is not None:
                row["ks"] = ks_against_normal(v, sigma)
            if self.config.statistic == "tailLaw":
                row["exceedance"] = {str(M): float(np.mean(v > M)) for M in self.config.thresholds}
            rows.append(row)
        return rows

    def summary(self):
        out = {
            "statistic": self.config.statistic,
            "replications": self.config.replications,
            "base_seed": self.config.base_seed,
            "per_n": self.aggregates(),
        }
        if self.config.statistic in RATE_STATISTICS and len(self.config.n_grid) >= 3:
            try:
                out["slope"], out["stderr"] = rate_slope(self)
            except DegenerateStatisticError as exc:
                out["slope"], out["stderr"], out["slope_error"] = None, None, str(exc)
        sigma = self.reference_sigma()
        if sigma is not None:
            out["limit_variance"] = sigma ** 2
        if self.config.statistic == "convolutionTerms":
            out["young_violations"] = int(np.sum(self.series["crossTerm"] > self.series["youngBound"]))
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["statistic", "n", "replication", "value"])
            for name in sorted(self.series):
                for i, n in enumerate(self.config.n_grid):
                    for r, v in enumerate(self.series[name][i]):
                        w.writerow([name, n, r, repr(float(v))])

    def write_json_rows(self, path):
        rows = [
            {"statistic": name, "n": n, "replication": r, "value": float(v)}
            for name in sorted(self.series)
            for i, n in enumerate(self.config.n_grid)
            for r, v in enumerate(self.series[name][i])
        ]
        with open(path, "w") as fh:
            json.dump(rows, fh)

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def run_experiment(cfg, workers=None):
    """Run every ``(n, r)`` replication and collect the statistic series.

    ``workers`` (default ``cfg.workers``) > 1 spreads replications across
    processes; output is identical either way.
    """
    check_hypotheses(cfg)
    workers = cfg.workers if workers is None else max(1, int(workers))
    R = cfg.replications
    tasks = [(i, n, r) for i, n in enumerate(cfg.n_grid) for r in range(R)]
    if workers == 1:
        done = [(i, r, replicate(cfg, n, r)) for i, n, r in tasks]
    else:
        chunks = [tasks[k::workers] for k in range(workers)]
        payload = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = [item for part in pool.map(_run_chunk, [(payload, c) for c in chunks]) for item in part]
    done.sort(key=lambda t: (t[0], t[1]))
    series = {}
    for i, r, values in done:
        for name, v in values.items():
            series.setdefault(name, np.full((len(cfg.n_grid), R), np.nan))[i, r] = v
    return ExperimentResult(cfg, series)


def fit_loglog(ns, values):
    """Least-squares slope of ``log(values)`` on ``log(ns)`` with its standard error."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.size < 3:
        raise ValueError("need at least 3 sample sizes for a slope")
    if np.any(~(values > 0)):
        raise DegenerateStatisticError(f"non-positive summary values {values.tolist()}")
    fit = stats.linregress(np.log(ns), np.log(values))
    return float(fit.slope), float(fit.stderr)


def rate_slope(result):
    """``(slope, stderr)`` of log median statistic against log n."""
    return fit_loglog(result.n_grid, result.medians())


def ks_against_normal(values, sigma):
    """Kolmogorov distance between the empirical law of ``values`` and ``N(0, sigma^2)``.

    ``sigma = 0`` means the point mass at 0, which only all-zero values match.
    """
    values = np.asarray(values, dtype=float)
    if sigma == 0:
        if np.any(values != 0):
            raise DistributionMismatchError("sigma = 0 (point mass at 0) but some values are nonzero")
        return 0.0
    if not sigma > 0:
        raise ValueError("sigma must be non-negative")
    return float(stats.kstest(values, "norm", args=(0.0, sigma)).statistic)


def evaluate_bands(result, bands=None):
    """Verdicts ``(label, passed, detail)`` for the acceptance bands in ``bands``.

    Recognised keys: ``slope: [lo, hi]``, ``ks_max``, ``variance_rel_tol``
    (relative to the limit variance) and ``exceedance_se`` (binomial standard
    errors allowed around ``||p0||_inf / M``, meaningful for uniform p0).
    """
    bands = result.config.acceptance if bands is None else bands
    out = []
    summary = result.summary()
    if "slope" in bands:
        lo, hi = bands["slope"]
        s = summary.get("slope")
        ok = s is not None and lo <= s <= hi
        out.append(("slope", ok, f"slope={s} band=[{lo}, {hi}] stderr={summary.get('stderr')}"))
    last = summary["per_n"][-1]
    if "ks_max" in bands and "ks" in last:
        ok = last["ks"] < bands["ks_max"]
        out.append(("ks", ok, f"KS={last['ks']:.4f} max={bands['ks_max']} at n={last['n']}"))
    if "variance_rel_tol" in bands and "limit_variance" in summary:
        target = summary["limit_variance"]
        rel = abs(last["variance"] - target) / target
        out.append(("variance", rel <= bands["variance_rel_tol"],
                    f"variance={last['variance']:.5f} target={target:.5f} rel={rel:.3f}"))
    if "exceedance_se" in bands and result.config.statistic == "tailLaw":
        K = result.config.reference().upper_bound
        R = result.config.replications
        for row in summary["per_n"]:
            for M, freq in row["exceedance"].items():
                p = min(K / float(M), 1.0)
                se = math.sqrt(p * (1 - p) / R)
                ok = abs(freq - p) <= bands["exceedance_se"] * se
                out.append((f"exceedance n={row['n']} M={M}", ok, f"freq={freq:.4f} target={p:.4f} se={se:.4f}"))
    return out
