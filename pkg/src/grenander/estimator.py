"""Grenander estimator: empirical CDF, least concave majorant, left derivative.

The hull is built in a single left-to-right monotone-chain pass over the
distinct observation values, anchored at the origin. ``grenander_oracle`` is
an independent O(n^2) min-max evaluation used to cross-check the hull.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SampleError
from .quadrature import as_evaluable

MASS_TOL = 1e-12
SLOPE_TOL = 1e-12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Sample:
    """Sorted non-negative observations. Build with :func:`make_sample`."""

    values: np.ndarray

    @property
    def n(self):
        return int(self.values.size)

    @property
    def max(self):
        return float(self.values[-1])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        return isinstance(other, Sample) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


def make_sample(raw):
    """Validate raw observations and return them as a sorted :class:`Sample`.

    Raises
    ------
    SampleError
        On empty input or a negative / non-finite value (the first offending
        index is reported).
    """
    arr = np.asarray(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float).ravel()
    if arr.size == 0:
        raise SampleError("sample is empty")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise SampleError(f"non-finite value at index {bad[0]}: {arr[bad[0]]!r}")
    neg = np.flatnonzero(arr < 0)
    if neg.size:
        raise SampleError(f"negative value at index {neg[0]}: {arr[neg[0]]!r}")
    return Sample(_frozen(np.sort(arr)))


def read_sample_file(path):
    """Parse a text file with one number per line; ``#`` lines and blanks are skipped.

    Malformed lines raise :class:`SampleError` citing the 1-based line number.
    """
    raw = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                raw.append(float(text))
            except ValueError:
                raise SampleError(f"line {lineno}: cannot parse {text!r} as a number") from None
    return make_sample(raw)


@dataclass(frozen=True, eq=False)
class EmpiricalCDF:
    """Right-continuous ECDF stored at its distinct jump points."""

    jump_points: np.ndarray
    heights: np.ndarray
    n: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_points, t, side="right")
        h = np.concatenate(([0.0], self.heights))
        return h[idx]

    def left_limits(self):
        """ECDF value just below each jump point."""
        return np.concatenate(([0.0], self.heights[:-1]))


def empirical_cdf(s):
    values, counts = np.unique(s.values, return_counts=True)
    cum = np.cumsum(counts)
    heights = cum / s.n
    heights[-1] = 1.0
    return EmpiricalCDF(_frozen(values), _frozen(heights), s.n)


@dataclass(frozen=True, eq=False)
class ConcaveMajorant:
    """Vertices of the least concave majorant, from (0, 0) to (X_(n), 1)."""

    x: np.ndarray
    y: np.ndarray

    @property
    def vertices(self):
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def slopes(self):
        return np.diff(self.y) / np.diff(self.x)

    def __call__(self, t):
        return eval_fitted_cdf(self, t)


def least_concave_majorant(F):
    """Upper convex hull of ``(0, 0)`` and the ECDF points, in one pass.

    Points with equal slope up to a relative 1e-12 are dropped, so the vertex
    set is minimal and slopes strictly decrease. An observation at exactly 0
    has no room for a finite slope; its point is skipped and the anchor is kept.
    """
    xs = [0.0]
    ys = [0.0]
    for px, py in zip(F.jump_points.tolist(), F.heights.tolist()):
        if px <= 0.0:
            continue
        while len(xs) >= 2:
            ox, oy, ax, ay = xs[-2], ys[-2], xs[-1], ys[-1]
            lhs = (ax - ox) * (py - oy)
            rhs = (ay - oy) * (px - ox)
            # middle point is dropped when on or below the chord
            if lhs - rhs >= -SLOPE_TOL * (abs(lhs) + abs(rhs)):
                xs.pop()
                ys.pop()
            else:
                break
        xs.append(px)
        ys.append(py)
    if len(xs) < 2:
        raise SampleError("all observations are 0; the likelihood is unbounded")
    return ConcaveMajorant(_frozen(xs), _frozen(ys))


@dataclass(frozen=True, eq=False)
class StepDensity:
    """Left-continuous non-increasing step density.

    ``values[j]`` holds on ``(breakpoints[j], breakpoints[j + 1]]``; the value at
    0 is ``values[0]`` and the density vanishes beyond the last breakpoint.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp, v = self.breakpoints, self.values
        if bp.ndim != 1 or v.ndim != 1 or bp.size != v.size + 1 or v.size == 0:
            raise ValueError("need m + 1 breakpoints for m values, m >= 1")
        if bp[0] != 0.0:
            raise ValueError("first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(v <= 0) or np.any(np.diff(v) > 0):
            raise ValueError("values must be positive and non-increasing")
        if abs(self.mass() - 1.0) > MASS_TOL * max(1, v.size):
            raise ValueError(f"density integrates to {self.mass()!r}, not 1")

    @classmethod
    def from_arrays(cls, breakpoints, values):
        return cls(_frozen(breakpoints), _frozen(values))

    @property
    def support_end(self):
        return float(self.breakpoints[-1])

    @property
    def widths(self):
        return np.diff(self.breakpoints)

    def mass(self):
        return float(np.dot(self.values, np.diff(self.breakpoints)))

    def sup_norm(self):
        return float(self.values[0])

    def __call__(self, x):
        return eval_density(self, x)

    def cdf(self, t):
        """Exact distribution function (piecewise linear)."""
        t = np.asarray(t, dtype=float)
        cum = np.concatenate(([0.0], np.cumsum(self.values * self.widths)))
        return np.interp(t, self.breakpoints, cum, left=0.0, right=1.0)

    def to_dict(self):
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls.from_arrays(d["breakpoints"], d["values"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def majorant_density(M):
    """Left derivative of a concave majorant as a :class:`StepDensity`."""
    return StepDensity.from_arrays(M.x, M.slopes)


def grenander_fit(s):
    """Nonparametric MLE over non-increasing densities for sample ``s``."""
    return majorant_density(least_concave_majorant(empirical_cdf(s)))


def fit_with_majorant(s):
    """``(StepDensity, ConcaveMajorant, EmpiricalCDF)`` for one sample."""
    F = empirical_cdf(s)
    M = least_concave_majorant(F)
    return majorant_density(M), M, F


def grenander_oracle(s, x):
    """Min-max evaluation of the Grenander estimator at ``x``.

    ``min over u < x`` of ``max over t >= x`` of ``(F_n(t) - F_n(u)) / (t - u)``
    with ``u`` ranging over 0 and the jump points and ``t`` over the jump
    points. Quadratic in the number of distinct values; meant for checking.
    """
    x = float(x)
    if not 0.0 < x <= s.max:
        raise ValueError(f"x={x!r} outside (0, {s.max!r}]")
    F = empirical_cdf(s)
    us = np.concatenate(([0.0], F.jump_points))
    Fu = np.concatenate(([0.0], F.heights))
    keep = us < x
    us, Fu = us[keep], Fu[keep]
    tmask = F.jump_points >= x
    ts, Ft = F.jump_points[tmask], F.heights[tmask]
    q = (Ft[None, :] - Fu[:, None]) / (ts[None, :] - us[:, None])
    return float(np.min(np.max(q, axis=1)))


def eval_density(p, x):
    """Left-continuous evaluation; 0 off the support, ``values[0]`` at 0."""
    x = np.asarray(x, dtype=float)
    idx = np.searchsorted(p.breakpoints, x, side="left")
    v = np.concatenate((p.values[:1], p.values, [0.0]))
    out = np.where(x < 0, 0.0, v[idx])
    return out if out.ndim else float(out)


def eval_fitted_cdf(M, t):
    """Piecewise-linear interpolation of the majorant; 1 beyond the last vertex."""
    out = np.interp(np.asarray(t, dtype=float), M.x, M.y, left=0.0, right=1.0)
    return out if np.ndim(out) else float(out)


def log_likelihood(p, s):
    """Mean log density at the observations.

    Raises :class:`DomainError` naming the first observation where ``p <= 0``.
    """
    vals = as_evaluable(p)(s.values)
    bad = np.flatnonzero(~(vals > 0))
    if bad.size:
        i = bad[0]
        raise DomainError(f"density is {vals[i]!r} at observation {i} (x={s.values[i]!r})")
    return float(np.mean(np.log(vals)))


def bounds_diagnostics(p_hat, s):
    """``(p_hat(X_(n)), p_hat(0))``: the minimum on the data range and the sup norm."""
    return float(eval_density(p_hat, s.max)), float(eval_density(p_hat, 0.0))


def normalization_error(p):
    return abs(p.mass() - 1.0)
