"""The two planning objectives and Pareto dominance.

c1 charges expected lateness beyond each flight's scheduled arrival,
super-linearly so that one long delay costs more than many short ones.
c2 integrates over time the expected squared excess of each sector's
occupancy count over its capacity.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .congestion import CongestionProfile, congestion_profile
from .model import Instance
from .propagate import MarginalSet, propagate_marginals


class ObjectiveVector(NamedTuple):
    c1: float
    c2: float


def delay_cost(inst: Instance, marginals: MarginalSet, beta: float = 2.0) -> float:
    """Sum over flights of E[((T_arrival - scheduled)_+)^beta] at bin midpoints."""
    total = 0.0
    for flight in inst.flights:
        arrival = marginals[flight.id][-1]
        late = arrival.grid.midpoints() - flight.scheduled_arrival
        np.clip(late, 0.0, None, out=late)
        total += float(np.dot(late**beta, arrival.mass))
    return total


def congestion_cost(profile: CongestionProfile) -> float:
    """Left-Riemann time integral of the expected squared capacity excess."""
    total = 0.0
    for sector in profile.sectors:
        if sector.tail.size == 0:
            continue
        excess = np.arange(1, sector.tail.shape[0] + 1, dtype=np.float64)
        total += float(np.dot(excess**2, sector.tail.sum(axis=1)))
    return total * profile.grid.step


def evaluate(inst: Instance, values: np.ndarray, beta: float = 2.0) -> ObjectiveVector:
    """Both objectives for one feasible schedule vector. Pure and deterministic."""
    marginals = propagate_marginals(inst, values)
    profile = congestion_profile(inst, marginals)
    return ObjectiveVector(
        c1=delay_cost(inst, marginals, beta=beta),
        c2=congestion_cost(profile),
    )


def dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool:
    """Strict Pareto dominance: no worse in both objectives, better in at least one."""
    return a.c1 <= b.c1 and a.c2 <= b.c2 and (a.c1 < b.c1 or a.c2 < b.c2)
