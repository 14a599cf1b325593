"""Distances between densities and the sup distance between fitted and empirical CDFs.

Step and piecewise-linear operands are compared exactly; anything else goes
through breakpoint-aligned composite quadrature. ``method="quadrature"`` forces
the quadrature route so the two can be cross-checked.
"""

from __future__ import annotations

import numpy as np

from .errors import InconsistencyError
from .estimator import StepDensity, eval_fitted_cdf
from .piecewise import try_poly
from .quadrature import DEFAULT_SPEC, as_evaluable, integrate

_DOMINATION_TOL = 1e-12


def _knots(p, q):
    ep, eq = as_evaluable(p), as_evaluable(q)
    return np.union1d(ep.breakpoints, eq.breakpoints), ep, eq


def _check_method(method):
    if method not in ("auto", "exact", "quadrature"):
        raise ValueError(f"unknown method {method!r}")


def hellinger(p, q, spec=DEFAULT_SPEC, method="auto"):
    """Hellinger distance ``h`` with ``h^2 = 1/2 int (sqrt p - sqrt q)^2``."""
    _check_method(method)
    if method != "quadrature" and isinstance(p, StepDensity) and isinstance(q, StepDensity):
        knots = np.union1d(p.breakpoints, q.breakpoints)
        mid = 0.5 * (knots[:-1] + knots[1:])
        h2 = 0.5 * np.sum((np.sqrt(p(mid)) - np.sqrt(q(mid))) ** 2 * np.diff(knots))
    else:
        if method == "exact":
            raise TypeError("exact Hellinger distance needs two step densities")
        knots, ep, eq = _knots(p, q)
        h2 = 0.5 * integrate(lambda x: (np.sqrt(np.maximum(ep(x), 0)) - np.sqrt(np.maximum(eq(x), 0))) ** 2, knots, spec)
    return float(np.sqrt(np.clip(h2, 0.0, 1.0)))


def l2_distance(p, q, spec=DEFAULT_SPEC, method="auto"):
    _check_method(method)
    if method != "quadrature":
        pp, pq = try_poly(p), try_poly(q)
        if pp is not None and pq is not None:
            return float(np.sqrt(max((pp - pq).square_integral(), 0.0)))
        if method == "exact":
            raise TypeError("exact L2 distance needs piecewise-polynomial operands")
    knots, ep, eq = _knots(p, q)
    return float(np.sqrt(max(integrate(lambda x: (ep(x) - eq(x)) ** 2, knots, spec), 0.0)))


def l1_distance(p, q, spec=DEFAULT_SPEC, method="auto"):
    _check_method(method)
    if method != "quadrature":
        pp, pq = try_poly(p), try_poly(q)
        if pp is not None and pq is not None:
            return (pp - pq).abs_integral()
        if method == "exact":
            raise TypeError("exact L1 distance needs piecewise-polynomial operands")
    knots, ep, eq = _knots(p, q)
    return integrate(lambda x: np.abs(ep(x) - eq(x)), knots, spec)


def sup_diff_cdf(M, F):
    """``sup_t |F_hat(t) - F_n(t)|`` for the majorant ``M`` of the ECDF ``F``.

    ``F_hat >= F_n`` and ``F_n`` is flat between jumps, so the supremum is the
    largest gap between the majorant at a jump point and the ECDF just below it.
    """
    Mx = np.asarray(eval_fitted_cdf(M, F.jump_points))
    # an observation at exactly 0 is not dominated at 0 (see least_concave_majorant)
    positive = F.jump_points > 0
    short = F.heights - Mx
    if np.any(short[positive] > _DOMINATION_TOL):
        i = int(np.argmax(np.where(positive, short, -np.inf)))
        raise InconsistencyError(
            f"majorant {Mx[i]!r} below ECDF {F.heights[i]!r} at x={F.jump_points[i]!r}"
        )
    return float(np.max(Mx - F.left_limits()))
