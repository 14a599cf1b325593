"""Closed-form non-increasing reference densities on a bounded support [0, alpha1].

Each family exposes pdf / cdf / quantile, its bounds ``lower_bound`` (zeta) and
``upper_bound`` (K), the curvature flag used to gate smooth-functional
experiments, and its discontinuities. Sampling is inverse-CDF driven by a
Philox counter-based stream keyed from ``(seed, *key)``, so a replication's
draws never depend on execution order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .errors import ConfigurationError
from .estimator import StepDensity, make_sample

_TOL = 1e-12
_U53 = 2.0 ** -53


class ReferenceDensity:
    """Base class; subclasses implement ``_pdf``, ``_cdf`` and ``_quantile`` on arrays."""

    family: str
    alpha1: float

    # -- closed forms supplied by subclasses --------------------------------
    def _pdf(self, x):
        raise NotImplementedError

    def _cdf(self, x):
        raise NotImplementedError

    def _quantile(self, u):
        raise NotImplementedError

    # -- public surface ------------------------------------------------------
    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x <= self.alpha1)
        out = np.where(inside, self._pdf(np.clip(x, 0.0, self.alpha1)), 0.0)
        return out if out.ndim else float(out)

    __call__ = pdf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0, 0.0, np.where(x >= self.alpha1, 1.0, self._cdf(np.clip(x, 0.0, self.alpha1))))
        return out if out.ndim else float(out)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0) & (u < 1))):
            raise ValueError("quantile level must lie in (0, 1)")
        out = np.clip(self._quantile(u), 0.0, self.alpha1)
        return out if out.ndim else float(out)

    @property
    def support(self):
        return (0.0, self.alpha1)

    @property
    def breakpoints(self):
        return np.array([0.0, self.alpha1])

    @property
    def upper_bound(self):
        return float(self._pdf(np.array(0.0)))

    @property
    def lower_bound(self):
        return float(self._pdf(np.array(self.alpha1)))

    @property
    def strict_curvature(self):
        return False

    @property
    def inverse_curvature(self):
        """Essential sup of ``lambda / Dp0``; infinite without strict curvature."""
        return math.inf

    @property
    def jump_points(self):
        """Interior discontinuities as ``(t, left limit - right limit)`` pairs."""
        return []

    def jump_size(self, t):
        for s, delta in self.jump_points:
            if abs(s - t) <= _TOL * max(1.0, abs(t)):
                return delta
        return 0.0

    def as_step(self):
        """Exact :class:`StepDensity` for piecewise-constant families, else None."""
        return None

    def poly_pieces(self):
        """``(knots, coefs)`` with ``coefs[c, k]`` the x**k coefficient on cell c, or None."""
        step = self.as_step()
        if step is None:
            return None
        return step.breakpoints, step.values[:, None]

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(ReferenceDensity):
    alpha1: float = 1.0
    family: str = field(default="uniform", init=False)

    def __post_init__(self):
        if not self.alpha1 > 0:
            raise ValueError("alpha1 must be positive")

    def _pdf(self, x):
        return np.full(np.shape(x), 1.0 / self.alpha1)

    def _cdf(self, x):
        return x / self.alpha1

    def _quantile(self, u):
        return u * self.alpha1

    def as_step(self):
        return StepDensity.from_arrays([0.0, self.alpha1], [1.0 / self.alpha1])

    def to_config(self):
        return {"family": "uniform", "alpha1": self.alpha1}


@dataclass(frozen=True)
class Linear(ReferenceDensity):
    """``a - b x`` on ``[0, alpha1]``."""

    a: float = 1.5
    b: float = 1.0
    alpha1: float = 1.0
    family: str = field(default="linear", init=False)

    def __post_init__(self):
        if not (self.alpha1 > 0 and self.b >= 0):
            raise ValueError("need alpha1 > 0 and b >= 0")
        if not self.a - self.b * self.alpha1 > 0:
            raise ValueError("density must stay positive on [0, alpha1]")
        mass = self.a * self.alpha1 - 0.5 * self.b * self.alpha1 ** 2
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"linear density integrates to {mass!r}, not 1")

    def _pdf(self, x):
        return self.a - self.b * x

    def _cdf(self, x):
        return self.a * x - 0.5 * self.b * x * x

    def _quantile(self, u):
        # stable root of b/2 x^2 - a x + u = 0
        return 2.0 * u / (self.a + np.sqrt(self.a * self.a - 2.0 * self.b * u))

    @property
    def strict_curvature(self):
        return self.b > 0

    @property
    def inverse_curvature(self):
        return 1.0 / self.b if self.b > 0 else math.inf

    def poly_pieces(self):
        return np.array([0.0, self.alpha1]), np.array([[self.a, -self.b]])

    def as_step(self):
        if self.b == 0:
            return StepDensity.from_arrays([0.0, self.alpha1], [self.a])
        return None

    def to_config(self):
        return {"family": "linear", "a": self.a, "b": self.b, "alpha1": self.alpha1}


@dataclass(frozen=True)
class StepJump(ReferenceDensity):
    """Piecewise-constant density: ``heights[j]`` on ``(breaks[j], breaks[j + 1]]``."""

    breaks: tuple = (0.0, 0.5, 1.0)
    heights: tuple = (1.5, 0.5)
    family: str = field(default="stepJump", init=False)

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(b) for b in self.breaks))
        object.__setattr__(self, "heights", tuple(float(h) for h in self.heights))
        # StepDensity validates ordering, positivity, monotonicity and mass
        self.as_step()

    @property
    def alpha1(self):
        return self.breaks[-1]

    @property
    def breakpoints(self):
        return np.array(self.breaks)

    def _cum(self):
        return np.concatenate(([0.0], np.cumsum(np.array(self.heights) * np.diff(self.breaks))))

    def _pdf(self, x):
        idx = np.searchsorted(self.breaks, x, side="left")
        h = np.array((self.heights[0],) + self.heights)
        return h[np.minimum(idx, len(self.heights))]

    def _cdf(self, x):
        return np.interp(x, self.breaks, self._cum())

    def _quantile(self, u):
        return np.interp(u, self._cum(), self.breaks)

    @property
    def jump_points(self):
        h = self.heights
        return [(self.breaks[j + 1], h[j] - h[j + 1]) for j in range(len(h) - 1) if h[j] > h[j + 1]]

    def as_step(self):
        return StepDensity.from_arrays(self.breaks, self.heights)

    def to_config(self):
        return {"family": "stepJump", "breaks": list(self.breaks), "heights": list(self.heights)}


@dataclass(frozen=True)
class TruncExp(ReferenceDensity):
    """Exponential density with ``rate`` renormalised to ``[0, alpha1]``."""

    rate: float = 1.0
    alpha1: float = 1.0
    family: str = field(default="truncExp", init=False)

    def __post_init__(self):
        if not (self.rate > 0 and self.alpha1 > 0):
            raise ValueError("need rate > 0 and alpha1 > 0")

    @property
    def _z(self):
        return -math.expm1(-self.rate * self.alpha1)

    def _pdf(self, x):
        return self.rate * np.exp(-self.rate * x) / self._z

    def _cdf(self, x):
        return -np.expm1(-self.rate * x) / self._z

    def _quantile(self, u):
        return -np.log1p(-u * self._z) / self.rate

    @property
    def strict_curvature(self):
        return True

    @property
    def inverse_curvature(self):
        return 1.0 / (self.rate * self.lower_bound)

    def to_config(self):
        return {"family": "truncExp", "rate": self.rate, "alpha1": self.alpha1}


# ---------------------------------------------------------------------------
# module-level operations

def pdf(d, x):
    return d.pdf(x)


def cdf(d, x):
    return d.cdf(x)


def quantile(d, u):
    return d.quantile(u)


def seed_sequence(seed, *key):
    """Stream identity for ``(seed, *key)``; stable across numpy versions."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))


def uniform_stream(seed, n, *key):
    """``n`` uniforms strictly inside (0, 1) from a Philox generator."""
    gen = np.random.Generator(np.random.Philox(seed_sequence(seed, *key)))
    k = gen.integers(0, 2 ** 53, size=n, dtype=np.int64)
    return (k.astype(float) + 0.5) * _U53


def sample_iid(d, n, seed, *key):
    """``n`` inverse-CDF draws from ``d``, sorted; deterministic in ``(seed, key)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return make_sample(d.quantile(uniform_stream(seed, n, *key)))


# ---------------------------------------------------------------------------
# configuration

DENSITY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "Reference density",
    "oneOf": [
        {
            "type": "object",
            "properties": {"family": {"const": "uniform"}, "alpha1": {"type": "number", "exclusiveMinimum": 0}},
            "required": ["family"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "linear"},
                "a": {"type": "number"},
                "b": {"type": "number", "minimum": 0},
                "alpha1": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["family", "a", "b"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "stepJump"},
                "breaks": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "heights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            },
            "required": ["family", "breaks", "heights"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "family": {"const": "truncExp"},
                "rate": {"type": "number", "exclusiveMinimum": 0},
                "alpha1": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["family", "rate"],
            "additionalProperties": False,
        },
    ],
}

_FAMILIES = {"uniform": Uniform, "linear": Linear, "stepJump": StepJump, "truncExp": TruncExp}


def density_from_config(cfg):
    """Build a density from its JSON object, e.g. ``{"family": "linear", "a": 1.5, "b": 1.0}``."""
    try:
        jsonschema.validate(cfg, DENSITY_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid density spec {cfg!r}: {exc.message}") from None
    params = {k: v for k, v in cfg.items() if k != "family"}
    try:
        return _FAMILIES[cfg["family"]](**params)
    except ValueError as exc:
        raise ConfigurationError(f"invalid density spec {cfg!r}: {exc}") from None


def parse_density(text):
    """Density from a JSON string or a short name such as ``linear`` / ``stepJump``."""
    presets = {
        "uniform": Uniform(),
        "linear": Linear(),
        "stepJump": StepJump(),
        "truncExp": TruncExp(rate=1.0),
    }
    if text in presets:
        return presets[text]
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError:
        raise ConfigurationError(f"unknown density {text!r}") from None
    return density_from_config(cfg)
