"""Exact algebra on compactly supported piecewise polynomials.

Pieces are stored as global monomial coefficients (``coefs[c, k]`` multiplies
``x**k`` on cell ``c``). Degrees stay small here: steps are degree 0, the
linear reference family degree 1, and a convolution of two degree-1 pieces is
degree 3, so the global basis is well conditioned on the supports we use.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .estimator import StepDensity

_BISECT_STEPS = 80


def _horner(coefs, x):
    out = np.zeros_like(x, dtype=float)
    for k in range(coefs.shape[-1] - 1, -1, -1):
        out = out * x + coefs[..., k]
    return out


def _antiderivative(coefs):
    m, d = coefs.shape
    out = np.zeros((m, d + 1))
    out[:, 1:] = coefs / np.arange(1, d + 1)
    return out


def _pad(coefs, degree):
    if coefs.shape[1] >= degree + 1:
        return coefs
    return np.pad(coefs, ((0, 0), (0, degree + 1 - coefs.shape[1])))


@dataclass(frozen=True, eq=False)
class PiecewisePoly:
    """Polynomial pieces on ``knots``; zero outside ``[knots[0], knots[-1]]``.

    Evaluation is left-continuous at interior knots, matching the step densities.
    """

    knots: np.ndarray
    coefs: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        c = np.atleast_2d(np.asarray(self.coefs, dtype=float))
        if k.ndim != 1 or c.shape[0] != k.size - 1 or k.size < 2:
            raise ValueError("need len(knots) == number of pieces + 1 >= 2")
        if np.any(np.diff(k) < 0):
            raise ValueError("knots must be sorted")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "coefs", c)

    @property
    def degree(self):
        return self.coefs.shape[1] - 1

    @property
    def breakpoints(self):
        return self.knots

    @property
    def support(self):
        return float(self.knots[0]), float(self.knots[-1])

    @classmethod
    def from_step(cls, p):
        return cls(p.breakpoints, p.values[:, None])

    @classmethod
    def zero(cls):
        return cls(np.array([0.0, 1.0]), np.zeros((1, 1)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="left") - 1
        idx = np.clip(idx, 0, self.coefs.shape[0] - 1)
        out = _horner(self.coefs[idx], x)
        out = np.where((x >= self.knots[0]) & (x <= self.knots[-1]), out, 0.0)
        return out if out.ndim else float(out)

    def refine(self, knots):
        """Same function expressed on the sorted knot set ``knots`` (a superset of the support)."""
        knots = np.unique(np.asarray(knots, dtype=float))
        mid = 0.5 * (knots[:-1] + knots[1:])
        idx = np.clip(np.searchsorted(self.knots, mid, side="left") - 1, 0, self.coefs.shape[0] - 1)
        coefs = self.coefs[idx].copy()
        outside = (mid < self.knots[0]) | (mid > self.knots[-1])
        coefs[outside] = 0.0
        return PiecewisePoly(knots, coefs)

    def _binary(self, other, sign):
        other = to_poly(other)
        knots = np.union1d(self.knots, other.knots)
        a, b = self.refine(knots), other.refine(knots)
        deg = max(a.degree, b.degree)
        return PiecewisePoly(knots, _pad(a.coefs, deg) + sign * _pad(b.coefs, deg))

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __neg__(self):
        return PiecewisePoly(self.knots, -self.coefs)

    def scale(self, c):
        return PiecewisePoly(self.knots, c * self.coefs)

    def integral(self):
        A = _antiderivative(self.coefs)
        return float(np.sum(_horner(A, self.knots[1:]) - _horner(A, self.knots[:-1])))

    def square_integral(self):
        """Exact integral of the square."""
        m, d = self.coefs.shape
        sq = np.zeros((m, 2 * d - 1))
        for i in range(d):
            for j in range(d):
                sq[:, i + j] += self.coefs[:, i] * self.coefs[:, j]
        return PiecewisePoly(self.knots, sq).integral()

    def abs_integral(self):
        """Exact L1 norm: each cell is split at the real roots of its polynomial."""
        if self.degree > 3:
            raise NotImplementedError("abs_integral supports degree <= 3")
        c = _pad(self.coefs, 3)
        lo, hi = self.knots[:-1], self.knots[1:]
        crit = _critical_points(c)
        splits = np.sort(np.column_stack([lo, np.clip(crit, lo[:, None], hi[:, None]), hi]), axis=1)
        roots = _bisect_roots(c, splits)
        pts = np.sort(np.column_stack([splits, roots]), axis=1)
        A = _antiderivative(c)
        vals = _horner(A[:, None, :], pts)
        return float(np.sum(np.abs(np.diff(vals, axis=1))))

    def convolve(self, other):
        """Exact convolution; the result has degree ``deg f + deg g + 1``."""
        return convolve_polys(self, to_poly(other))

    def to_dict(self):
        return {"knots": self.knots.tolist(), "coefs": self.coefs.tolist()}


def _critical_points(c):
    """Roots of the derivative of cubic rows ``c``; NaN-free (missing roots fall back to the cell start)."""
    d1, d2, d3 = c[:, 1], 2.0 * c[:, 2], 3.0 * c[:, 3]
    out = np.full((c.shape[0], 2), -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        quad = d3 != 0
        disc = d2 * d2 - 4.0 * d3 * d1
        sq = np.sqrt(np.where(disc >= 0, disc, 0.0))
        r1 = (-d2 - sq) / (2.0 * d3)
        r2 = (-d2 + sq) / (2.0 * d3)
        ok = quad & (disc >= 0)
        out[ok, 0] = r1[ok]
        out[ok, 1] = r2[ok]
        lin = ~quad & (d2 != 0)
        out[lin, 0] = -d1[lin] / d2[lin]
    return out


def _bisect_roots(c, splits):
    """One root per monotone segment with a sign change; segment start otherwise."""
    a, b = splits[:, :-1], splits[:, 1:]
    cc = c[:, None, :]
    fa, fb = _horner(cc, a), _horner(cc, b)
    change = (fa * fb) < 0
    lo, hi = a.copy(), b.copy()
    flo = fa.copy()
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        fm = _horner(cc, mid)
        left = (flo * fm) <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    return np.where(change, 0.5 * (lo + hi), a)


def _substitute(G, alpha, beta, degree):
    """Univariate coefficients of ``G(alpha z + beta, z)`` for bivariate rows ``G[:, p, q]``."""
    P = G.shape[0]
    out = np.zeros((P, degree + 1))
    for p in range(G.shape[1]):
        for q in range(G.shape[2]):
            if p + q > degree:
                continue
            g = G[:, p, q]
            for r in range(p + 1):
                if alpha == 0 and r > 0:
                    break
                out[:, r + q] += g * comb(p, r) * (alpha ** r) * beta ** (p - r)
    return out


def convolve_polys(f, g):
    """Exact convolution of two piecewise polynomials.

    Every pair of cells ``[a, b] x [c, d]`` contributes
    ``z -> int_{max(a, z-d)}^{min(b, z-c)} A(x) B(z - x) dx`` on ``[a+c, b+d]``,
    a polynomial on each of three regimes. Contributions are accumulated on the
    Minkowski sum of the knots with a difference array.
    """
    Da, Db = f.degree, g.degree
    deg = Da + Db + 1
    m1, m2 = f.coefs.shape[0], g.coefs.shape[0]
    I, J = np.meshgrid(np.arange(m1), np.arange(m2), indexing="ij")
    I, J = I.ravel(), J.ravel()
    a, b = f.knots[I], f.knots[I + 1]
    c, d = g.knots[J], g.knots[J + 1]
    A, B = f.coefs[I], g.coefs[J]
    P = I.size

    # antiderivative in x of A(x) B(z - x) as bivariate coefficients G[:, x power, z power]
    G = np.zeros((P, deg + 1, Db + 1))
    for k in range(Da + 1):
        for l in range(Db + 1):
            for m in range(l + 1):
                G[:, k + m + 1, l - m] += A[:, k] * B[:, l] * comb(l, m) * (-1) ** m / (k + m + 1)

    Sa = _substitute(G, 0, a, deg)
    Sb = _substitute(G, 0, b, deg)
    Szc = _substitute(G, 1, -c, deg)
    Szd = _substitute(G, 1, -d, deg)

    k1, k2 = np.minimum(a + d, b + c), np.maximum(a + d, b + c)
    short_g = (a + d) <= (b + c)
    starts = np.concatenate([a + c, k1, k2])
    ends = np.concatenate([k1, k2, b + d])
    pieces = np.concatenate([Szc - Sa, np.where(short_g[:, None], Szc - Szd, Sb - Sa), Sb - Szd])
    keep = ends > starts
    starts, ends, pieces = starts[keep], ends[keep], pieces[keep]

    knots = np.unique(np.concatenate([starts, ends]))
    if knots.size < 2:
        return PiecewisePoly.zero()
    diff = np.zeros((knots.size, deg + 1))
    np.add.at(diff, np.searchsorted(knots, starts), pieces)
    np.add.at(diff, np.searchsorted(knots, ends), -pieces)
    coefs = np.cumsum(diff, axis=0)[:-1]
    return PiecewisePoly(knots, coefs)


def to_poly(obj):
    """Exact piecewise-polynomial form of ``obj``; raises TypeError when none exists."""
    if isinstance(obj, PiecewisePoly):
        return obj
    if isinstance(obj, StepDensity):
        return PiecewisePoly.from_step(obj)
    to = getattr(obj, "to_poly", None)
    if to is not None:
        return to()
    pieces = getattr(obj, "poly_pieces", None)
    if pieces is not None:
        res = pieces()
        if res is not None:
            return PiecewisePoly(*res)
    raise TypeError(f"{type(obj).__name__} has no exact piecewise-polynomial form")


def try_poly(obj):
    try:
        return to_poly(obj)
    except TypeError:
        return None
