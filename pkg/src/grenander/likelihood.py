"""Likelihood derivatives, the tangent-space projection and plug-in functionals.

Notation in code: ``p0`` is the reference density, ``P0 f`` its expectation of
``f``, ``p_hat`` a Grenander fit, ``P_n`` the empirical measure of a sample.
The Frechet derivatives of the log-likelihood are

    D^k l_n(p)[h_1..h_k] = (-1)^(k-1) (k-1)! P_n(p^-k h_1 ... h_k)

and the same with ``P0`` in place of ``P_n`` for the limiting likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import jsonschema
import numpy as np

from .densities import ReferenceDensity
from .errors import ConfigurationError, DomainError, UnsupportedFunctionError
from .estimator import Sample, empirical_cdf, grenander_fit
from .quadrature import FINE_SPEC, Evaluable, as_evaluable, integrate

GRID_POINTS = 10_000
MONOTONE_SLACK = 1e-10
INTEGRAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A bounded functional direction ``f`` with the norms the theorems need.

    ``derivative_sup`` is ``sup |f'|`` on the support when ``f`` is C^1, and
    ``ratio`` a fixed ``||Df/Dp0||`` for functions built from a density.
    """

    __test__ = False  # not a pytest class

    kind: str
    name: str
    fn: Callable
    sup_norm: float
    breakpoints: np.ndarray = field(default_factory=lambda: np.empty(0))
    t: Optional[float] = None
    holder_exponent: Optional[float] = None
    holder_norm: Optional[float] = None
    derivative_sup: Optional[float] = None
    ratio: Optional[float] = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape)
        return out if out.ndim else float(out)

    @property
    def is_indicator(self):
        return self.kind == "indicator"

    def df_over_dp0(self, d):
        """``||Df/Dp0||_{inf, Dp0}`` for this function against ``d``, or None if unknown/infinite."""
        if self.kind == "indicator":
            if self.t >= d.alpha1:
                return 0.0
            delta = d.jump_size(self.t)
            return 1.0 / delta if delta > 0 else None
        if self.ratio is not None:
            return self.ratio
        if self.derivative_sup is not None:
            if self.derivative_sup == 0:
                return 0.0
            if d.strict_curvature:
                return self.derivative_sup * d.inverse_curvature
        return None


def indicator(t):
    """``1[0, t]``."""
    t = float(t)
    if not t > 0:
        raise ValueError("indicator location must be positive")
    return TestFunction("indicator", f"indicator({t:g})", lambda x: (x <= t).astype(float), 1.0,
                        breakpoints=np.array([t]), t=t)


def constant_function(c):
    c = float(c)
    return TestFunction("hoelder", f"constant({c:g})", lambda x: np.full(np.shape(x), c), abs(c),
                        holder_exponent=1.0, holder_norm=0.0, derivative_sup=0.0)


def hoelder(name, support_end=1.0):
    """Shipped Hoelder directions: ``cos2pi``, ``abspow`` (``|x - 1/2|^0.6``) and ``identity``."""
    a = float(support_end)
    if name == "cos2pi":
        dsup = 2 * math.pi if a >= 0.25 else 2 * math.pi * math.sin(2 * math.pi * a)
        return TestFunction("hoelder", name, lambda x: np.cos(2 * np.pi * x), 1.0,
                            holder_exponent=1.0, holder_norm=dsup, derivative_sup=dsup)
    if name == "abspow":
        sup = max(0.5, abs(a - 0.5)) ** 0.6
        return TestFunction("hoelder", name, lambda x: np.abs(x - 0.5) ** 0.6, sup,
                            breakpoints=np.array([0.5]), holder_exponent=0.6, holder_norm=1.0)
    if name == "identity":
        return TestFunction("hoelder", name, lambda x: np.asarray(x, dtype=float), a,
                            holder_exponent=1.0, holder_norm=1.0, derivative_sup=1.0)
    raise ValueError(f"unknown Hoelder function {name!r}")


def bv_function(name, d):
    """Bounded-variation directions whose derivative is a multiple of ``Dp0``.

    ``p0``: ``f = p0`` (ratio 1). ``p0sq``: ``f = p0^2`` (``Df = 2 p0 Dp0``, ratio ``2K``).
    """
    K = d.upper_bound
    if name == "p0":
        return TestFunction("bv", name, d.pdf, K, breakpoints=d.breakpoints, ratio=1.0)
    if name == "p0sq":
        return TestFunction("bv", name, lambda x: d.pdf(x) ** 2, K * K, breakpoints=d.breakpoints, ratio=2 * K)
    raise ValueError(f"unknown bounded-variation function {name!r}")


FUNCTIONAL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Test function",
    "oneOf": [
        {"type": "object", "properties": {"kind": {"const": "indicator"}, "t": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["kind", "t"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "hoelder"}, "name": {"enum": ["cos2pi", "abspow", "identity"]}},
         "required": ["kind", "name"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "bv"}, "name": {"enum": ["p0", "p0sq"]}},
         "required": ["kind", "name"], "additionalProperties": False},
        {"type": "object", "properties": {"kind": {"const": "constant"}, "value": {"type": "number"}},
         "required": ["kind", "value"], "additionalProperties": False},
    ],
}


def functional_from_config(cfg, d):
    try:
        jsonschema.validate(cfg, FUNCTIONAL_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid functional spec {cfg!r}: {exc.message}") from None
    kind = cfg["kind"]
    if kind == "indicator":
        return indicator(cfg["t"])
    if kind == "hoelder":
        return hoelder(cfg["name"], d.alpha1)
    if kind == "bv":
        return bv_function(cfg["name"], d)
    return constant_function(cfg["value"])


# ---------------------------------------------------------------------------
# expectations under p0

def _support_knots(d, *objs):
    knots = [d.breakpoints]
    for o in objs:
        bp = np.asarray(getattr(o, "breakpoints", ()), dtype=float)
        knots.append(bp[(bp > 0) & (bp < d.alpha1)])
    return np.unique(np.concatenate(knots))


def _constant_value(f):
    if isinstance(f, TestFunction) and f.derivative_sup == 0:
        return float(f(0.0))
    return None


def expectation(f, d, spec=FINE_SPEC):
    """``P0 f``; exact ``F0(t)`` for indicators and ``c`` for constants."""
    if isinstance(f, TestFunction) and f.is_indicator:
        return float(d.cdf(f.t))
    c = _constant_value(f)
    if c is not None:
        return c
    ef = as_evaluable(f)
    return integrate(lambda x: ef(x) * d.pdf(x), _support_knots(d, ef), spec)


def pi0_projection(f, d, spec=FINE_SPEC):
    """``x -> (f(x) - P0 f) p0(x)``, a zero-integral direction.

    The returned evaluable carries ``mean`` (``P0 f``) and ``function`` (``f``).
    """
    mean = expectation(f, d, spec)
    ef = as_evaluable(f)
    if _constant_value(f) is not None:
        proj = Evaluable(lambda x: np.zeros(np.shape(x)))
    else:
        proj = Evaluable(lambda x: (ef(x) - mean) * d.pdf(x), _support_knots(d, ef))
    proj.mean = mean
    proj.function = f
    return proj


def perturbation_bound(f, d):
    """Largest ``|eta|`` for which ``p0 + eta * pi0(f)`` is guaranteed a positive monotone density.

    ``min(zeta / (2 K ||f||), 1 / (max(2, K) (||f|| + ||Df/Dp0||)))``; infinite for ``f = 0``.
    """
    ratio = f.df_over_dp0(d)
    if ratio is None:
        raise UnsupportedFunctionError(f"||Df/Dp0|| is unknown or infinite for {f.name} under {d.family}")
    sup = f.sup_norm
    if sup == 0 and ratio == 0:
        return math.inf
    K, zeta = d.upper_bound, d.lower_bound
    first = zeta / (2 * K * sup) if sup > 0 else math.inf
    second = 1.0 / (max(2.0, K) * (sup + ratio))
    return min(first, second)


@dataclass(frozen=True, eq=False)
class Perturbation:
    eta: float
    function: TestFunction
    base: ReferenceDensity

    @property
    def direction(self):
        return pi0_projection(self.function, self.base)

    def perturbed(self):
        return as_evaluable(self.base) + self.eta * self.direction


@dataclass(frozen=True)
class PerturbationReport:
    valid: bool
    positive: bool
    monotone: bool
    normalized: bool
    first_violation: Optional[float] = None
    reason: str = ""


def check_perturbation_valid(pert, grid_points=GRID_POINTS):
    """Grid check that ``p0 + eta pi0(f)`` is positive, non-increasing and integrates to 1."""
    d = pert.base
    g = pert.perturbed()
    grid = np.linspace(0.0, d.alpha1, grid_points)
    vals = g(grid)
    neg = np.flatnonzero(vals <= 0)
    rises = np.flatnonzero(np.diff(vals) > MONOTONE_SLACK)
    mass = integrate(g, _support_knots(d, g), FINE_SPEC)
    positive, monotone = neg.size == 0, rises.size == 0
    normalized = abs(mass - 1.0) <= INTEGRAL_TOL
    if not positive:
        return PerturbationReport(False, False, monotone, normalized, float(grid[neg[0]]),
                                  f"non-positive value {vals[neg[0]]!r}")
    if not monotone:
        i = rises[0] + 1
        return PerturbationReport(False, True, False, normalized, float(grid[i]),
                                  f"increases by {vals[i] - vals[i - 1]!r}")
    if not normalized:
        return PerturbationReport(False, True, True, False, None, f"integrates to {mass!r}")
    return PerturbationReport(True, True, True, True)


# ---------------------------------------------------------------------------
# log-likelihood derivatives

def dlog_likelihood(order, base, directions, measure, spec=FINE_SPEC):
    """``order``-th Frechet derivative of the log-likelihood at ``base``.

    ``measure`` is a :class:`Sample` (empirical likelihood) or a
    :class:`ReferenceDensity` (limiting likelihood, integrated over its support).
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    if len(directions) != order:
        raise ValueError(f"need {order} directions, got {len(directions)}")
    sign = (-1) ** (order - 1) * math.factorial(order - 1)
    p = as_evaluable(base)
    hs = [as_evaluable(h) for h in directions]

    if isinstance(measure, Sample):
        x = measure.values
        pv = p(x)
        bad = np.flatnonzero(~(pv > 0))
        if bad.size:
            raise DomainError(f"base density is {pv[bad[0]]!r} at observation {bad[0]} (x={x[bad[0]]!r})")
        prod = np.prod([h(x) for h in hs], axis=0)
        return sign * float(np.mean(prod / pv ** order))

    d = measure
    knots = _support_knots(d, p, *hs)

    def integrand(x):
        pv = p(x)
        if np.any(~(pv > 0)):
            i = int(np.argmax(~(pv > 0)))
            raise DomainError(f"base density is {pv[i]!r} at x={x[i]!r} inside the support")
        prod = np.prod([h(x) for h in hs], axis=0)
        return prod / pv ** order * d.pdf(x)

    return sign * integrate(integrand, knots, spec)


def score_self(s, d, p_hat=None):
    """``D l_n(p_hat)[p_hat - p0] = P_n((p_hat - p0) / p_hat)``, signed."""
    p_hat = grenander_fit(s) if p_hat is None else p_hat
    return dlog_likelihood(1, p_hat, [as_evaluable(p_hat) - d], s)


def plugin_minus_empirical(p_hat, s, f, spec=FINE_SPEC):
    """``int f dP_hat - P_n f``; exact ``F_hat(t) - F_n(t)`` for indicators, 0 for constants."""
    if isinstance(f, TestFunction) and f.is_indicator:
        return float(p_hat.cdf(f.t) - empirical_cdf(s)(f.t))
    if _constant_value(f) is not None:
        return 0.0
    ef = as_evaluable(f)
    bp = ef.breakpoints
    knots = np.union1d(p_hat.breakpoints, bp[(bp > 0) & (bp < p_hat.support_end)])
    return integrate(lambda x: ef(x) * p_hat(x), knots, spec) - float(np.mean(ef(s.values)))


def plugin_mean(p_hat, f, spec=FINE_SPEC):
    """``int f dP_hat``."""
    if isinstance(f, TestFunction) and f.is_indicator:
        return float(p_hat.cdf(f.t))
    c = _constant_value(f)
    if c is not None:
        return c
    ef = as_evaluable(f)
    bp = ef.breakpoints
    knots = np.union1d(p_hat.breakpoints, bp[(bp > 0) & (bp < p_hat.support_end)])
    return integrate(lambda x: ef(x) * p_hat(x), knots, spec)


def clt_statistic(p_hat, d, f, n, spec=FINE_SPEC):
    """``sqrt(n) (int f dP_hat - P0 f)``."""
    return math.sqrt(n) * (plugin_mean(p_hat, f, spec) - expectation(f, d, spec))


def gaussian_covariance(f, g, d, spec=FINE_SPEC):
    """Brownian-bridge covariance ``P0(fg) - P0 f P0 g``."""
    if isinstance(f, TestFunction) and isinstance(g, TestFunction) and f.is_indicator and g.is_indicator:
        Fs, Ft = float(d.cdf(f.t)), float(d.cdf(g.t))
        return float(d.cdf(min(f.t, g.t))) - Fs * Ft
    mf, mg = expectation(f, d, spec), expectation(g, d, spec)
    ef, eg = as_evaluable(f), as_evaluable(g)
    return integrate(lambda x: (ef(x) - mf) * (eg(x) - mg) * d.pdf(x), _support_knots(d, ef, eg), spec)


def limit_variance(f, d, spec=FINE_SPEC):
    """``P0 (f - P0 f)^2``; exactly ``F0(t) (1 - F0(t))`` for ``1[0, t]``."""
    if isinstance(f, TestFunction) and f.is_indicator:
        F = float(d.cdf(f.t))
        return F * (1.0 - F)
    return gaussian_covariance(f, f, d, spec)
