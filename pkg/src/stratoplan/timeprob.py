"""Discrete temporal probability primitives.

Overflight times live on a shared uniform grid of right-open bins: bin k
covers [origin + k*step, origin + (k+1)*step). A pmf over the grid stands
in for a continuous density whose mass is uniform inside each bin, so the
CDF is piecewise linear with exact values at bin edges. Expectations are
taken at bin midpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateSupportError, GridRangeError

# |sum(mass) - 1| allowed for a pmf that claims to be fully normalized.
MASS_TOL = 1e-9
# Normalization slack required of a fresh triangular discretization.
DISCRETIZE_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Uniform right-open binning of a planning horizon, in minutes."""

    origin: float
    step: float = 1.0
    bins: int = 1

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.bins < 1:
            raise ValueError(f"need at least one bin, got {self.bins}")

    @property
    def end(self) -> float:
        return self.origin + self.bins * self.step

    def edges(self) -> np.ndarray:
        """All bins + 1 edge times, origin first."""
        return self.origin + self.step * np.arange(self.bins + 1)

    def midpoints(self) -> np.ndarray:
        return self.origin + self.step * (np.arange(self.bins) + 0.5)

    def bin_start(self, k: int) -> float:
        return self.origin + k * self.step

    def bin_index(self, t: float) -> int:
        """Bin containing t. The closing edge of the span belongs to the last bin."""
        if t < self.origin or t > self.end:
            raise GridRangeError(f"t={t} outside grid span [{self.origin}, {self.end}]")
        k = int((t - self.origin) // self.step)
        return min(k, self.bins - 1)

    @classmethod
    def cover(cls, lo: float, hi: float, step: float) -> "TimeGrid":
        """Smallest step-aligned grid whose span contains [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        origin = math.floor(lo / step) * step
        bins = max(1, math.ceil((hi - origin) / step - 1e-9))
        return cls(origin=origin, step=step, bins=bins)


@dataclass(frozen=True)
class TriangularSpec:
    """Triangular density on [a, b] with mode c, a <= c <= b and a < b."""

    a: float
    c: float
    b: float

    def __post_init__(self) -> None:
        if not self.a <= self.c <= self.b:
            raise ValueError(f"need a <= c <= b, got ({self.a}, {self.c}, {self.b})")
        if not self.a < self.b:
            raise DegenerateSupportError(
                f"triangular support [{self.a}, {self.b}] is a point; use point_mass instead"
            )


@dataclass(frozen=True)
class Pmf:
    """Probability mass over a TimeGrid, immutable once built.

    A pmf either sums to 1 within MASS_TOL or is explicitly tagged
    subprobability (a slice of something larger).
    """

    grid: TimeGrid
    mass: np.ndarray
    subprobability: bool = False

    def __post_init__(self) -> None:
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.grid.bins,):
            raise ValueError(f"mass shape {mass.shape} does not match {self.grid.bins} bins")
        if np.any(mass < -1e-15):
            raise ValueError(f"negative mass, min {mass.min()}")
        mass = np.where(mass < 0.0, 0.0, mass)  # scrub float dust only
        total = float(mass.sum())
        if self.subprobability:
            if total > 1.0 + MASS_TOL:
                raise ValueError(f"subprobability mass sums to {total} > 1")
        elif abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"mass sums to {total}, expected 1 within {MASS_TOL}")
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    @property
    def total(self) -> float:
        return float(self.mass.sum())


def triangular_cdf(t, spec: TriangularSpec):
    """CDF of the triangular density, vectorized over t."""
    a, c, b = spec.a, spec.c, spec.b
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    if c > a:
        rising = (t > a) & (t <= c)
        out[rising] = (t[rising] - a) ** 2 / ((b - a) * (c - a))
    if b > c:
        falling = (t > c) & (t < b)
        out[falling] = 1.0 - (b - t[falling]) ** 2 / ((b - a) * (b - c))
    out[t >= b] = 1.0
    return out


def discretize_triangular(spec: TriangularSpec, grid: TimeGrid) -> Pmf:
    """Exact per-bin integrals of the triangular density, as a Pmf.

    The support must lie inside the grid span; masses are CDF differences
    at bin edges, then normalized to kill float dust (the residue is
    required to be below DISCRETIZE_TOL).
    """
    if spec.a < grid.origin or spec.b > grid.end:
        raise GridRangeError(
            f"triangular support [{spec.a}, {spec.b}] outside grid span "
            f"[{grid.origin}, {grid.end}]"
        )
    mass = np.diff(triangular_cdf(grid.edges(), spec))
    total = float(mass.sum())
    if abs(total - 1.0) > DISCRETIZE_TOL:
        raise AssertionError(f"discretization lost mass: sum={total}")
    return Pmf(grid, mass / total)


def point_mass(t: float, grid: TimeGrid) -> Pmf:
    """All mass in the bin containing t."""
    mass = np.zeros(grid.bins)
    mass[grid.bin_index(t)] = 1.0
    return Pmf(grid, mass)


def cdf(p: Pmf, t: float) -> float:
    """F(t): mass of bins entirely before t plus a linear fraction of t's bin."""
    g = p.grid
    if t <= g.origin:
        return 0.0
    if t >= g.end:
        return float(p.mass.sum())
    k = g.bin_index(t)
    before = float(p.mass[:k].sum())
    frac = (t - g.bin_start(k)) / g.step
    return before + float(p.mass[k]) * frac


def cdf_at_edges(p: Pmf) -> np.ndarray:
    """F evaluated at every bin edge, length bins + 1, starting at 0."""
    out = np.empty(p.grid.bins + 1)
    out[0] = 0.0
    np.cumsum(p.mass, out=out[1:])
    return out


def expectation_of(p: Pmf, fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """E[fn(T)] with T represented by bin midpoints; fn must accept an ndarray."""
    return float(np.dot(np.asarray(fn(p.grid.midpoints()), dtype=np.float64), p.mass))


def mean_of(p: Pmf) -> float:
    return float(np.dot(p.grid.midpoints(), p.mass))


def variance_of(p: Pmf) -> float:
    m = mean_of(p)
    d = p.grid.midpoints() - m
    return float(np.dot(d * d, p.mass))


def skewness_of(p: Pmf) -> float:
    """Standardized third moment at bin midpoints; 0 for a degenerate pmf."""
    m = mean_of(p)
    d = p.grid.midpoints() - m
    var = float(np.dot(d * d, p.mass))
    if var <= 0.0:
        return 0.0
    return float(np.dot(d * d * d, p.mass)) / var**1.5
