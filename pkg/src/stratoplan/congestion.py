"""Closed-form sector occupancy probabilities and congestion tails.

A flight with crossing (i, j) is inside the sector during [T_i, T_j). For a
time bin [t_min, t_max) the presence probability is F_i(t_max) - F_j(t_min):
entered by the end of the bin and not yet out at its start, exact because
T_i <= T_j always. Counts over independent flights follow the
Poisson binomial distribution, built by one multiplication per flight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .model import Instance, SectorCrossing
from .timeprob import Pmf, TimeGrid, cdf_at_edges

# Presence below this is treated as exactly zero: such a flight cannot
# contribute to the occupancy count of the bin.
PRESENCE_FLOOR = 1e-15
# Worst negative rounding residue tolerated before declaring the marginals
# inconsistent (exit CDF above entry CDF means the arrow of time broke).
NEG_RESIDUE_TOL = 1e-12


def presence_profile(marginals: list[Pmf], crossing: SectorCrossing) -> np.ndarray:
    """Presence probability of one flight in its sector, for every bin."""
    entry = marginals[crossing.entry_index]
    exit_ = marginals[crossing.exit_index]
    q = cdf_at_edges(entry)[1:] - cdf_at_edges(exit_)[:-1]
    worst = float(q.min())
    if worst < -NEG_RESIDUE_TOL:
        raise ModelError(
            f"flight {crossing.flight_id}: exit CDF exceeds entry CDF by {-worst:.3g}; "
            "marginals are inconsistent"
        )
    q = np.clip(q, 0.0, 1.0)
    q[q < PRESENCE_FLOOR] = 0.0
    return q


def presence_probability(marginals: list[Pmf], crossing: SectorCrossing, bin_index: int) -> float:
    """Presence probability in a single bin; scalar contract of presence_profile."""
    return float(presence_profile(marginals, crossing)[bin_index])


def poisson_binomial_pmf(q) -> np.ndarray:
    """Distribution of the number of successes among independent trials.

    Recurrence over trials m: P_m(n) = q_m * P_{m-1}(n-1) + (1 - q_m) * P_{m-1}(n),
    one vector update per trial. Exact for q in {0, 1}.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 1:
        raise ValueError(f"need a vector of probabilities, got shape {q.shape}")
    if q.size and (q.min() < 0.0 or q.max() > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    pmf = np.zeros(q.size + 1)
    pmf[0] = 1.0
    for m, p in enumerate(q):
        pmf[1 : m + 2] = pmf[1 : m + 2] * (1.0 - p) + pmf[: m + 1] * p
        pmf[0] *= 1.0 - p
    return pmf


def _poisson_binomial_columns(q: np.ndarray) -> np.ndarray:
    """Column-wise Poisson binomial: q is (trials, bins), result (trials+1, bins)."""
    n, bins = q.shape
    pmf = np.zeros((n + 1, bins))
    pmf[0] = 1.0
    for m in range(n):
        p = q[m]
        pmf[1 : m + 2] = pmf[1 : m + 2] * (1.0 - p) + pmf[: m + 1] * p
        pmf[0] *= 1.0 - p
    return pmf


def congestion_tail(q, capacity: int) -> np.ndarray:
    """Pr(K = n) for n = capacity+1 .. N; empty when capacity >= N."""
    if capacity < 0:
        raise ValueError(f"capacity must be nonnegative, got {capacity}")
    pmf = poisson_binomial_pmf(q)
    return pmf[capacity + 1 :]


def enumeration_count(total: int, choose: int) -> int:
    """Number of ways to pick the congesting subset: C(total, choose), exact."""
    if choose < 0 or choose > total:
        raise ValueError(f"need 0 <= choose <= total, got ({total}, {choose})")
    return math.comb(total, choose)


@dataclass(frozen=True)
class SectorProfile:
    """Per-bin occupancy summary of one sector.

    presence: per-crossing presence probabilities, shape (crossings, bins).
    tail: Pr(K = capacity + 1 + m) rows, shape (crossings - capacity, bins)
    (empty when capacity covers everyone).
    prob_over: aggregate Pr(K > capacity) per bin.
    """

    sector_id: str
    capacity: int
    presence: np.ndarray
    tail: np.ndarray
    prob_over: np.ndarray


@dataclass(frozen=True)
class CongestionProfile:
    grid: TimeGrid
    sectors: tuple[SectorProfile, ...]

    def by_id(self, sector_id: str) -> SectorProfile:
        for s in self.sectors:
            if s.sector_id == sector_id:
                return s
        raise KeyError(sector_id)


def congestion_profile(inst: Instance, marginals: dict[str, list[Pmf]]) -> CongestionProfile:
    """Occupancy distributions for every sector of an instance.

    The profile lives on the marginals' grid, which may be a regridded copy
    of the instance grid.
    """
    grid = next(iter(marginals.values()))[0].grid if marginals else inst.grid
    profiles = []
    for sector in inst.sectors:
        if not sector.crossings:
            q = np.zeros((0, grid.bins))
        else:
            q = np.vstack(
                [presence_profile(marginals[c.flight_id], c) for c in sector.crossings]
            )
        pmf = _poisson_binomial_columns(q)
        tail = np.clip(pmf[sector.capacity + 1 :], 0.0, 1.0)
        profiles.append(
            SectorProfile(
                sector_id=sector.id,
                capacity=sector.capacity,
                presence=q,
                tail=tail,
                prob_over=tail.sum(axis=0),
            )
        )
    return CongestionProfile(grid=grid, sectors=tuple(profiles))
