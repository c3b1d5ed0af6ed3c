"""Markov propagation of overflight-time uncertainty along a flight plan.

The entry time gets a triangular law whose mode is the first target,
truncated to the entry window. Each later overflight time is conditionally
triangular around the previous time plus the nominal leg duration, with the
mode pulled toward that waypoint's target. Marginals follow by mixing the
conditional rows over the previous marginal, one leg at a time.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintError, DegenerateSupportError, GridRangeError, HorizonError
from .model import FlightPlan, Instance, assert_feasible
from .timeprob import Pmf, TimeGrid, TriangularSpec, triangular_cdf

log = logging.getLogger(__name__)

# Marginals per flight, entry first, arrival last.
MarginalSet = dict[str, list[Pmf]]


def entry_marginal(flight: FlightPlan, gamma1: float, grid: TimeGrid) -> Pmf:
    """Triangular entry-time law with mode gamma1, truncated to the entry window.

    The support has length flight.entry_support_len centered on the mode;
    whatever falls outside the window is cut and the rest renormalized, so a
    target at a window edge yields a half triangle peaking at that edge.
    """
    lo, hi = flight.entry_window
    if not lo - 1e-9 <= gamma1 <= hi + 1e-9:
        raise ConstraintError(
            f"flight {flight.id}: entry target {gamma1} outside window [{lo}, {hi}]"
        )
    half = flight.entry_support_len / 2
    spec = TriangularSpec(gamma1 - half, gamma1, gamma1 + half)
    cut_lo = max(spec.a, lo)
    cut_hi = min(spec.b, hi)
    if cut_lo < grid.origin or cut_hi > grid.end:
        raise GridRangeError(
            f"flight {flight.id}: entry support [{cut_lo}, {cut_hi}] outside grid span"
        )
    edges = np.clip(grid.edges(), cut_lo, cut_hi)
    mass = np.diff(triangular_cdf(edges, spec))
    total = float(mass.sum())
    if total <= 0.0:
        raise DegenerateSupportError(
            f"flight {flight.id}: entry window cuts away the whole support"
        )
    return Pmf(grid, mass / total)


@dataclass
class ConditionalKernel:
    """Conditional law of the next overflight time, one lazy row per source bin.

    The row for source bin k (left edge t) is triangular on
    [max(t + duration - support/2, t + step), t + duration + support/2] with
    mode clamp(target, support). Rows are cached by their mode offset, which
    repeats across source bins; a dense matrix is never materialized. A row
    that overhangs the grid end is cut and renormalized (counted in
    clip_events); a row entirely beyond the end raises HorizonError.
    """

    grid: TimeGrid
    duration: float
    support_len: float
    target: float
    clip_events: int = 0
    clipped_mass: float = 0.0
    _shapes: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        step = self.grid.step
        self.rel_lo = max(self.duration - self.support_len / 2, step)
        self.rel_hi = self.duration + self.support_len / 2
        if self.rel_hi <= self.rel_lo:
            raise DegenerateSupportError(
                f"conditional support empty: duration {self.duration}, "
                f"support {self.support_len}, step {step}"
            )
        # Band of destination bins relative to the source bin; exact because
        # every source anchor sits on the step lattice.
        self.b0 = int(math.floor(self.rel_lo / step + 1e-12))
        self.b1 = int(math.ceil(self.rel_hi / step - 1e-12))

    def _shape(self, rel_mode: float) -> np.ndarray:
        key = round(rel_mode, 9)
        got = self._shapes.get(key)
        if got is not None:
            return got
        step = self.grid.step
        spec = TriangularSpec(self.rel_lo, rel_mode, self.rel_hi)
        edges = np.clip(step * np.arange(self.b0, self.b1 + 1), self.rel_lo, self.rel_hi)
        mass = np.diff(triangular_cdf(edges, spec))
        mass /= mass.sum()
        mass.flags.writeable = False
        self._shapes[key] = mass
        return mass

    def band(self, source_bin: int) -> tuple[int, np.ndarray]:
        """(first destination bin, masses) for one source bin; masses sum to 1."""
        g = self.grid
        t = g.bin_start(source_bin)
        rel_mode = min(max(self.target - t, self.rel_lo), self.rel_hi)
        start = source_bin + self.b0
        if start >= g.bins:
            raise HorizonError(
                f"conditional row from t={t} lies entirely beyond the grid end {g.end}"
            )
        stop = source_bin + self.b1
        if stop <= g.bins:
            return start, self._shape(rel_mode)
        # Overhang: integrate against the truncated support and renormalize.
        spec = TriangularSpec(self.rel_lo, rel_mode, self.rel_hi)
        hi_cut = (g.bins - source_bin) * g.step  # grid end in source-relative time
        edges = np.clip(
            g.step * np.arange(self.b0, g.bins - source_bin + 1), self.rel_lo, hi_cut
        )
        mass = np.diff(triangular_cdf(edges, spec))
        total = float(mass.sum())
        if total <= 0.0:
            raise HorizonError(
                f"conditional row from t={t} has no mass inside the grid"
            )
        self.clip_events += 1
        self.clipped_mass += 1.0 - total
        return start, mass / total

    def row(self, source_bin: int) -> Pmf:
        """Full-grid pmf of the row for one source bin."""
        start, band = self.band(source_bin)
        mass = np.zeros(self.grid.bins)
        mass[start : start + band.size] = band
        return Pmf(self.grid, mass)

    def apply(self, p: Pmf) -> Pmf:
        """Mix rows over a marginal: out[t'] = sum_t row(t)[t'] * p[t].

        All active rows share the same band shape, so they are built in one
        broadcast pass rather than through band(); results agree with
        row-by-row mixing up to rounding.
        """
        g = self.grid
        active = np.flatnonzero(p.mass)
        if active.size == 0:
            return Pmf(g, np.zeros(g.bins))
        if int(active[-1]) + self.b0 >= g.bins:
            t = g.bin_start(int(active[-1]))
            raise HorizonError(
                f"conditional row from t={t} lies entirely beyond the grid end {g.end}"
            )
        step = g.step
        t = g.origin + active * step
        modes = np.clip(self.target - t, self.rel_lo, self.rel_hi)[:, None]
        rel_edges = np.clip(
            step * np.arange(self.b0, self.b1 + 1), self.rel_lo, self.rel_hi
        )
        hi_cut = (g.bins - active)[:, None] * step
        edges = np.minimum(rel_edges[None, :], hi_cut)
        cdf_rows = _triangular_cdf_rows(edges, self.rel_lo, modes, self.rel_hi)
        mass = np.diff(cdf_rows, axis=1)
        totals = mass.sum(axis=1)
        if np.any(totals <= 0.0):
            k = int(active[np.flatnonzero(totals <= 0.0)[0]])
            raise HorizonError(
                f"conditional row from t={g.bin_start(k)} has no mass inside the grid"
            )
        truncated = active + self.b1 > g.bins
        if truncated.any():
            self.clip_events += int(truncated.sum())
            self.clipped_mass += float((1.0 - totals[truncated]).sum())
        weights = p.mass[active] / totals
        out = np.zeros(g.bins + mass.shape[1])
        np.add.at(
            out,
            active[:, None] + np.arange(self.b0, self.b1)[None, :],
            mass * weights[:, None],
        )
        return Pmf(g, out[: g.bins])


def _triangular_cdf_rows(t: np.ndarray, a: float, c: np.ndarray, b: float):
    """Triangular CDF over a batch of rows that share [a, b] but not the mode.

    t is (rows, edges), c is (rows, 1); evaluation points must already lie
    in [a, b]. Matches triangular_cdf pointwise, including the degenerate
    half-triangle cases c == a and c == b.
    """
    span = b - a
    up = c - a
    down = b - c
    with np.errstate(divide="ignore", invalid="ignore"):
        rising = np.where(up > 0, (t - a) ** 2 / (span * up), 0.0)
        falling = np.where(down > 0, 1.0 - (b - t) ** 2 / (span * down), 1.0)
    return np.where(t <= c, rising, falling)


def build_kernel(
    grid: TimeGrid, duration: float, support_len: float, target: float
) -> ConditionalKernel:
    return ConditionalKernel(grid, duration, support_len, target)


def propagate_marginals(
    inst: Instance, values: np.ndarray, grid: TimeGrid | None = None
) -> MarginalSet:
    """Per-flight overflight-time marginals for a feasible schedule vector."""
    assert_feasible(inst, values)
    grid = grid or inst.grid
    out: MarginalSet = {}
    clip_events = 0
    clipped_mass = 0.0
    for idx, flight in enumerate(inst.flights):
        targets = inst.targets_for(np.asarray(values, dtype=np.float64), idx)
        p = entry_marginal(flight, float(targets[0]), grid)
        marginals = [p]
        for leg, duration in enumerate(flight.durations):
            kernel = ConditionalKernel(
                grid, duration, flight.enroute_support_len, float(targets[leg + 1])
            )
            p = kernel.apply(p)
            clip_events += kernel.clip_events
            clipped_mass += kernel.clipped_mass
            marginals.append(p)
        out[flight.id] = marginals
    if clip_events:
        log.warning(
            "grid end cut %d conditional rows (%.3g probability mass renormalized); "
            "consider a longer horizon",
            clip_events,
            clipped_mass,
        )
    return out
