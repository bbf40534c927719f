"""Seeded synthetic distributions and their ground-truth entropies.

Every generator is deterministic given ``(spec, seed)``; every oracle is
either a closed form or adaptive quadrature of ``-p log p`` and never touches
the estimator code paths, so fits can be validated against an independent
reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .integrate import entropy_integral, merge_intervals

SQRT3 = math.sqrt(3.0)


def gauss_entropy(d: int, variance: float = 1.0) -> float:
    """Entropy of an isotropic normal: ``(d/2) log(2 pi e var)``."""
    if variance <= 0:
        raise ParameterError("variance must be positive")
    return 0.5 * d * math.log(2.0 * math.pi * math.e * variance)


def oracle_mi_gauss(rho: float, d: int = 1) -> float:
    """MI of d i.i.d. standard-normal pairs with per-axis correlation rho."""
    if not -1.0 < rho < 1.0:
        raise ParameterError("correlation must lie in (-1, 1)")
    return -0.5 * d * math.log1p(-rho * rho)


# --------------------------------------------------------------------------
# Gaussian generators
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSpec:
    """Isotropic normal source, optionally shrinking by ``shrink**epoch``."""

    dim: int
    shrink: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        if not 0.0 < self.shrink <= 1.0:
            raise ParameterError("shrink factor must lie in (0, 1]")
        if not -1.0 < self.rho < 1.0:
            raise ParameterError("correlation must lie in (-1, 1)")

    def variance_at(self, epoch: int) -> float:
        return self.shrink**epoch

    def entropy_at(self, epoch: int) -> float:
        return gauss_entropy(self.dim, self.variance_at(epoch))

    def entropy_step(self) -> float:
        """Per-epoch entropy decrease ``-(d/2) log shrink``."""
        return -0.5 * self.dim * math.log(self.shrink)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "shrink": self.shrink, "rho": self.rho}

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianSpec":
        return cls(**data)


def sample_gauss(d: int, n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """n i.i.d. draws from N(0, scale^2 I_d)."""
    if n < 1:
        raise ParameterError("need n >= 1")
    return scale * rng.standard_normal((n, d))


def sample_correlated_gauss(d: int, rho: float, n: int, rng: np.random.Generator):
    """Paired draws with per-axis correlation: ``Y = rho X + sqrt(1-rho^2) G``."""
    if not -1.0 < rho < 1.0:
        raise ParameterError("correlation must lie in (-1, 1)")
    x = rng.standard_normal((n, d))
    g = rng.standard_normal((n, d))
    return x, rho * x + math.sqrt(1.0 - rho * rho) * g


# --------------------------------------------------------------------------
# triangle mixtures
# --------------------------------------------------------------------------

def triangle_pdf(x: np.ndarray, scale: float) -> np.ndarray:
    """Unit-mass tent of width ``scale``: ``(1/s) max(0, 2 - 4|x|/s)``."""
    x = np.asarray(x, dtype=float)
    return np.maximum(0.0, 2.0 - 4.0 * np.abs(x) / scale) / scale


def triangle_entropy(scale: float) -> float:
    """Closed form for one tent: ``1/2 + log(s/2)``."""
    if scale <= 0:
        raise ParameterError("scale must be positive")
    return 0.5 + math.log(scale / 2.0)


@dataclass(frozen=True)
class TriangleMixtureSpec:
    """Mixture of tents, component i centered at ``i + 1/2`` (i = 1..c).

    In d dimensions the coordinates are i.i.d. copies, so the joint density
    has ``c**d`` separated modes for non-overlapping tents.
    """

    weights: tuple
    scales: tuple
    dim: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        s = np.asarray(self.scales, dtype=float)
        if w.shape != s.shape or w.ndim != 1 or w.size < 1:
            raise ParameterError("weights and scales must be equal-length vectors")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ParameterError("weights must be positive and sum to one")
        if np.any((s < 0.1) | (s > 1.0)):
            raise ParameterError("scales must lie in [0.1, 1.0]")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "scales", tuple(float(v) for v in s))

    @property
    def components(self) -> int:
        return len(self.weights)

    @property
    def centers(self) -> np.ndarray:
        return np.arange(1, self.components + 1) + 0.5

    @classmethod
    def random(cls, components: int, dim: int, rng: np.random.Generator) -> "TriangleMixtureSpec":
        """Weights uniform on the simplex, scales uniform in [0.1, 1]."""
        w = rng.dirichlet(np.ones(components))
        s = rng.uniform(0.1, 1.0, size=components)
        return cls(tuple(w), tuple(s), dim)

    def pdf1(self, x: np.ndarray) -> np.ndarray:
        """Density of one coordinate."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, s, c in zip(self.weights, self.scales, self.centers):
            out += w * triangle_pdf(x - c, s)
        return out

    def support_segments(self) -> list:
        half = np.asarray(self.scales) / 2.0
        return merge_intervals(zip(self.centers - half, self.centers + half))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Each coordinate independently picks a component and draws from
        its tent (difference of two uniforms)."""
        if n < 1:
            raise ParameterError("need n >= 1")
        comp = rng.choice(self.components, size=(n, self.dim), p=self.weights)
        s = np.asarray(self.scales)[comp]
        c = self.centers[comp]
        u = rng.uniform(size=(n, self.dim)) + rng.uniform(size=(n, self.dim)) - 1.0
        return c + 0.5 * s * u

    def entropy_1d(self, tol: float = 1e-9) -> float:
        """Quadrature of ``-p log p`` over the union of tent supports."""
        # integrate between consecutive breakpoints so each piece is smooth
        pts = set()
        for s, c in zip(self.scales, self.centers):
            pts.update((c - s / 2.0, c, c + s / 2.0))
        pts = sorted(pts)
        segments = []
        for lo, hi in self.support_segments():
            inner = [p for p in pts if lo < p < hi]
            edges = [lo] + inner + [hi]
            segments.extend(zip(edges[:-1], edges[1:]))
        return entropy_integral(self.pdf1, segments, tol=tol)

    def entropy(self, tol: float = 1e-9) -> float:
        return self.dim * self.entropy_1d(tol)

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "scales": list(self.scales), "dim": self.dim}

    @classmethod
    def from_dict(cls, data: dict) -> "TriangleMixtureSpec":
        return cls(tuple(data["weights"]), tuple(data["scales"]), int(data.get("dim", 1)))


def sample_triangle_mixture(spec: TriangleMixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    return spec.sample(n, rng)


def oracle_entropy_triangle(spec: TriangleMixtureSpec, tol: float = 1e-9) -> float:
    return spec.entropy(tol)


# --------------------------------------------------------------------------
# uniform pairs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformPairSpec:
    """``Y = rho X + sqrt(1-rho^2) E`` with unit-variance uniform X, E."""

    rho: float
    dim: int = 1

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ParameterError("rho must lie in [0, 1)")
        if self.dim < 1:
            raise ParameterError("dim must be >= 1")

    def to_dict(self) -> dict:
        return {"rho": self.rho, "dim": self.dim}

    @classmethod
    def from_dict(cls, data: dict) -> "UniformPairSpec":
        return cls(**data)


def sample_uniform_pair(rho: float, d: int, n: int, rng: np.random.Generator):
    """Per-axis pairs with X, E uniform on [-sqrt(3), sqrt(3)]."""
    if not 0.0 <= rho < 1.0:
        raise ParameterError("rho must lie in [0, 1)")
    x = rng.uniform(-SQRT3, SQRT3, size=(n, d))
    e = rng.uniform(-SQRT3, SQRT3, size=(n, d))
    return x, rho * x + math.sqrt(1.0 - rho * rho) * e


def _trapezoid_pdf(width_a: float, width_b: float):
    """Density of the sum of centered uniforms of the given full widths."""
    lo_w, hi_w = sorted((width_a, width_b))
    flat = (hi_w - lo_w) / 2.0
    edge = (hi_w + lo_w) / 2.0

    def pdf(t):
        t = np.abs(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        ramp = (t > flat) & (t < edge)
        out[t <= flat] = 1.0 / hi_w
        out[ramp] = (edge - t[ramp]) / (hi_w * (edge - flat))
        return out

    return pdf, edge, flat


def oracle_mi_uniform(rho: float, d: int = 1, tol: float = 1e-9) -> float:
    """MI of the uniform-sum pair: ``h(Y) - h(Y | X)`` per axis, times d.

    ``h(Y|X)`` is the entropy of the scaled uniform noise term,
    ``log(2 sqrt(3)) + (1/2) log(1 - rho^2)``; ``h(Y)`` is quadrature over
    the trapezoidal density of the sum.
    """
    if not 0.0 <= rho < 1.0:
        raise ParameterError("rho must lie in [0, 1)")
    if rho == 0.0:
        return 0.0
    w_x = 2.0 * SQRT3 * rho
    w_e = 2.0 * SQRT3 * math.sqrt(1.0 - rho * rho)
    pdf, edge, flat = _trapezoid_pdf(w_x, w_e)
    segments = [(-edge, -flat), (-flat, flat), (flat, edge)] if flat > 0 else [(-edge, 0.0), (0.0, edge)]
    h_y = entropy_integral(pdf, segments, tol=tol)
    h_y_given_x = math.log(2.0 * SQRT3) + 0.5 * math.log1p(-rho * rho)
    return d * (h_y - h_y_given_x)


# --------------------------------------------------------------------------
# correlation schedules
# --------------------------------------------------------------------------

def rho_for_target_mi(target: float, d: int, family: str = "gauss", tol: float = 1e-6) -> float:
    """Correlation producing a requested total MI over d i.i.d. axes.

    Gaussian case in closed form, uniform case by bisection against the
    quadrature oracle.
    """
    if target < 0:
        raise ParameterError("target MI must be nonnegative")
    if target == 0:
        return 0.0
    if family == "gauss":
        return math.sqrt(1.0 - math.exp(-2.0 * target / d))
    if family == "uniform":
        lo, hi = 0.0, 1.0 - 1e-12
        if oracle_mi_uniform(hi, d) < target:
            raise ParameterError("target MI unreachable for uniform pairs")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if oracle_mi_uniform(mid, d) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    raise ParameterError("unknown family %r" % family)
