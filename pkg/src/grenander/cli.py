"""Command-line front end.

Every subcommand is an adapter around library calls; data goes to files and
stdout carries only summaries and verdict lines. Exit codes: 0 success,
2 input or syntax error, 3 configuration rejected by a hypothesis gate,
4 internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .convolution import convolve_steps
from .densities import parse_density
from .errors import ConfigurationError, InconsistencyError, SampleError
from .estimator import bounds_diagnostics, fit_with_majorant, log_likelihood, normalization_error, read_sample_file
from .harness import RATE_STATISTICS, STATISTICS, ExperimentConfig, evaluate_bands, run_experiment
from .metrics import hellinger, l1_distance, l2_distance, sup_diff_cdf

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_INTERNAL = 0, 2, 3, 4


class UsageError(Exception):
    """Bad input file, flag value or config syntax (exit 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- helpers ----------------------------------------------------------------

def _load_sample(path):
    try:
        return read_sample_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except SampleError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_config(path):
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        if p.suffix.lower() == ".toml":
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def parse_functional(text):
    """JSON object, or shorthand ``indicator:0.5``, ``hoelder:cos2pi``, ``bv:p0``, ``constant:1``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad --functional JSON: {exc}") from None
    kind, _, arg = text.partition(":")
    if kind == "indicator":
        try:
            return {"kind": "indicator", "t": float(arg)}
        except ValueError:
            raise UsageError(f"bad indicator threshold {arg!r}") from None
    if kind == "constant":
        try:
            return {"kind": "constant", "value": float(arg)}
        except ValueError:
            raise UsageError(f"bad constant {arg!r}") from None
    if kind in ("hoelder", "bv") and arg:
        return {"kind": kind, "name": arg}
    if kind in ("cos2pi", "abspow", "identity") and not arg:
        return {"kind": "hoelder", "name": kind}
    raise UsageError(f"unrecognised functional {text!r}")


def _parse_grid(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --n-grid {text!r}; expected comma-separated sizes") from None


def _density_config(text):
    return parse_density(text).to_config()


def build_config(args):
    """Config file (if any) with command-line overrides applied."""
    cfg = _load_config(args.config) if args.config else {}
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object or TOML table")
    if args.statistic:
        cfg["statistic"] = args.statistic
    if args.density:
        cfg["density"] = _density_config(args.density)
    if args.functional:
        cfg["functionals"] = [parse_functional(f) for f in args.functional]
    if args.n_grid:
        cfg["n_grid"] = _parse_grid(args.n_grid)
    if args.replications is not None:
        cfg["replications"] = args.replications
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    if isinstance(cfg.get("density"), str):
        cfg["density"] = _density_config(cfg["density"])
    return ExperimentConfig.from_dict(cfg)


def _write_text(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


# -- subcommands --------------------------------------------------------------

def cmd_fit(args):
    s = _load_sample(args.input)
    p_hat, _, _ = fit_with_majorant(s)
    lo, hi = bounds_diagnostics(p_hat, s)
    report = {
        "n": s.n,
        "pieces": int(p_hat.values.size),
        "p_hat_at_0": hi,
        "p_hat_at_max": lo,
        "log_likelihood": log_likelihood(p_hat, s),
    }
    out = {"density": p_hat.to_dict(), "report": report}
    if args.output:
        _write_text(args.output, json.dumps(out, indent=2) + "\n")
    print(f"n={s.n} pieces={report['pieces']} p_hat(0)={hi:.6g} p_hat(max)={lo:.6g} "
          f"loglik={report['log_likelihood']:.6g}")
    return EXIT_OK


def _experiment(args, require_rate):
    cfg = build_config(args)
    if require_rate and cfg.statistic not in RATE_STATISTICS:
        raise UsageError(f"rates needs a rate statistic ({', '.join(sorted(RATE_STATISTICS))})")
    if require_rate and len(cfg.n_grid) < 3:
        raise UsageError("rates needs at least 3 sample sizes")
    result = run_experiment(cfg)
    out = Path(args.output or "results")
    if out.suffix:
        out = out.with_suffix("")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out.parent}: {exc.strerror}") from None
    data_path = out.with_suffix("." + args.format)
    if args.format == "csv":
        result.write_csv(data_path)
    else:
        result.write_json_rows(data_path)
    summary_path = out.with_name(out.name + "_summary.json")
    result.write_summary(summary_path)
    summary = result.summary()
    line = f"{cfg.statistic}: R={cfg.replications} n={cfg.n_grid}"
    if "slope" in summary:
        line += f" slope={summary['slope']} stderr={summary['stderr']}"
    if "young_violations" in summary:
        line += f" young_violations={summary['young_violations']}"
    print(line)
    for label, ok, detail in evaluate_bands(result):
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    return EXIT_OK


def cmd_simulate(args):
    return _experiment(args, require_rate=False)


def cmd_rates(args):
    return _experiment(args, require_rate=True)


def cmd_convolve(args):
    if len(args.input or []) != 2:
        raise UsageError("convolve needs exactly two --input sample files")
    fits = [fit_with_majorant(_load_sample(path))[0] for path in args.input]
    conv = convolve_steps(*fits)
    if args.output:
        _write_text(args.output, conv.to_json() + "\n")
    print(f"knots={conv.knots.size} support=[{conv.knots[0]:.6g}, {conv.knots[-1]:.6g}] "
          f"mass={conv.integral():.12f}")
    return EXIT_OK


def cmd_diagnostics(args):
    s = _load_sample(args.input)
    p_hat, M, F = fit_with_majorant(s)
    lo, hi = bounds_diagnostics(p_hat, s)
    report = {
        "n": s.n,
        "p_hat_at_0": hi,
        "p_hat_at_max": lo,
        "normalization_error": normalization_error(p_hat),
        "sup_majorant_minus_ecdf": sup_diff_cdf(M, F),
        "log_likelihood": log_likelihood(p_hat, s),
    }
    if args.density:
        d = parse_density(args.density)
        report["reference"] = d.to_config()
        report["hellinger"] = hellinger(p_hat, d)
        report["l1"] = l1_distance(p_hat, d)
        report["l2"] = l2_distance(p_hat, d)
    if args.output:
        _write_text(args.output, json.dumps(report, indent=2) + "\n")
    print(" ".join(f"{k}={v:.6g}" for k, v in report.items() if isinstance(v, float)))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_experiment_flags(p):
    p.add_argument("--config", help="JSON or TOML experiment config (.toml suffix selects TOML)")
    p.add_argument("--output", help="output stem; writes STEM.csv|json and STEM_summary.json (default: results)")
    p.add_argument("--statistic", choices=STATISTICS)
    p.add_argument("--density", help="preset name (uniform, linear, stepJump, truncExp) or density JSON")
    p.add_argument("--functional", action="append",
                   help="test function, repeatable: indicator:T, hoelder:NAME, bv:NAME, constant:C or JSON")
    p.add_argument("--n-grid", help="comma-separated sample sizes, e.g. 100,1000,10000")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int, help="base seed of the replication streams")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on this)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="per-replication data format")


def build_parser():
    parser = _Parser(prog="grenander", description="Monotone density estimation and plug-in experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a sample file and write the step density as JSON")
    p.add_argument("--input", required=True, help="one observation per line; '#' starts a comment")
    p.add_argument("--output", help="JSON output path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rates", help="run a rate experiment and report the log-log slope")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("convolve", help="convolve the fits of two sample files")
    p.add_argument("--input", action="append", help="sample file; give exactly twice")
    p.add_argument("--output", help="JSON output path (knots and values)")
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("diagnostics", help="fit diagnostics, optionally against a reference density")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="JSON output path")
    p.add_argument("--density", help="reference density for distance reports")
    p.set_defaults(func=cmd_diagnostics)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.hypothesis:
            print(f"violated hypothesis: {exc.hypothesis}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        return EXIT_INPUT
    except InconsistencyError as exc:
        print(f"internal invariant failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
