"""Monte Carlo cross-check of the closed-form pipeline.

Simulates whole trajectories by sampling the entry time and each leg's
transit from the same building blocks the analytic path integrates, then
compares empirical overload probabilities and objective estimates against
the closed-form values. Used as an independent referee: the two routes
share no integration code, so agreement is evidence both are right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .congestion import congestion_profile
from .model import Instance
from .objectives import congestion_cost, delay_cost
from .propagate import build_kernel, entry_marginal, propagate_marginals
from .timeprob import Pmf

AGREE_SIGMA = 3.0  # per-cell tolerance in standard errors
SIGN_TEST_P = 0.01  # systematic-bias alarm threshold
OBJECTIVE_RTOL = 0.05
MIN_CELL_VARIANCE = 25.0  # n*p*(1-p) below this cannot resolve a sign


@dataclass(frozen=True)
class McConfig:
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.samples < 100:
            raise ValueError(f"need at least 100 samples, got {self.samples}")


@dataclass(frozen=True)
class McReport:
    samples: int
    cells_total: int
    cells_within: int
    agreement_fraction: float
    max_sigma: float
    sign_test_p: float
    c1_closed: float
    c1_empirical: float
    c2_closed: float
    c2_empirical: float
    passed: bool


def sample_pmf(pmf: Pmf, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw times from a bin distribution, uniform within each bin."""
    cum = np.concatenate(([0.0], np.cumsum(pmf.mass)))
    u = rng.random(size) * cum[-1]
    k = np.searchsorted(cum, u, side="right") - 1
    k = np.clip(k, 0, pmf.grid.bins - 1)
    mass = pmf.mass[k]
    frac = np.where(mass > 0, (u - cum[k]) / np.where(mass > 0, mass, 1.0), 0.0)
    return pmf.grid.origin + (k + frac) * pmf.grid.step


def sample_trajectories(
    inst: Instance,
    values: np.ndarray,
    samples: int,
    seed: int,
) -> dict[str, np.ndarray]:
    """Per flight, a (samples, waypoints) array of simulated passage times.

    Entry times come from the entry distribution; each later column is
    drawn from the leg's conditional transit law given the previous one.
    Rows depend on the previous time only through its bin, so draws are
    grouped by source bin and served from the cached row shapes.
    """
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    grid = inst.grid
    out: dict[str, np.ndarray] = {}
    for f, flight in enumerate(inst.flights):
        targets = inst.targets_for(values, f)
        times = np.empty((samples, flight.waypoint_count))
        times[:, 0] = sample_pmf(
            entry_marginal(flight, float(targets[0]), grid), rng, samples
        )
        for leg, duration in enumerate(flight.durations):
            kernel = build_kernel(
                grid, duration, flight.enroute_support_len, float(targets[leg + 1])
            )
            prev = times[:, leg]
            bins = np.floor((prev - grid.origin) / grid.step).astype(np.int64)
            bins = np.clip(bins, 0, grid.bins - 1)
            nxt = np.empty(samples)
            for b in np.unique(bins):
                idx = np.flatnonzero(bins == b)
                nxt[idx] = sample_pmf(kernel.row(int(b)), rng, idx.size)
            times[:, leg + 1] = nxt
        out[flight.id] = times
    return out


def _empirical_occupancy(
    inst: Instance, trajectories: dict[str, np.ndarray], samples: int
) -> dict[str, np.ndarray]:
    """Per sector, a (samples, bins) occupant-count matrix via a
    difference trick: +1 at the first occupied bin, -1 after the last."""
    grid = inst.grid
    occ: dict[str, np.ndarray] = {}
    rows = np.arange(samples)
    for sector in inst.sectors:
        delta = np.zeros((samples, grid.bins + 1))
        for crossing in sector.crossings:
            times = trajectories[crossing.flight_id]
            t_in = times[:, crossing.entry_index]
            t_out = times[:, crossing.exit_index]
            b_first = np.floor((t_in - grid.origin) / grid.step).astype(np.int64)
            b_last = np.ceil((t_out - grid.origin) / grid.step).astype(np.int64) - 1
            b_first = np.clip(b_first, 0, grid.bins - 1)
            b_last = np.clip(np.maximum(b_last, b_first), 0, grid.bins - 1)
            np.add.at(delta, (rows, b_first), 1.0)
            np.add.at(delta, (rows, b_last + 1), -1.0)
        occ[sector.id] = np.cumsum(delta[:, :-1], axis=1)
    return occ


def _sign_test_p(diffs: np.ndarray) -> float:
    """Exact two-sided sign test on the signs of the given differences."""
    pos = int((diffs > 0).sum())
    neg = int((diffs < 0).sum())
    n = pos + neg
    if n == 0:
        return 1.0
    k = min(pos, neg)
    tail = sum(math.comb(n, i) for i in range(k + 1)) / 2**n
    return min(1.0, 2.0 * tail)


def _empirical_delay(
    inst: Instance, trajectories: dict[str, np.ndarray], beta: float = 2.0
) -> float:
    total = 0.0
    for flight in inst.flights:
        arrival = trajectories[flight.id][:, -1]
        late = np.clip(arrival - flight.scheduled_arrival, 0.0, None)
        total += float(np.mean(late**beta))
    return total


def _empirical_congestion(inst: Instance, occupancy: dict[str, np.ndarray]) -> float:
    step = inst.grid.step
    total = 0.0
    for sector in inst.sectors:
        excess = np.clip(occupancy[sector.id] - sector.capacity, 0.0, None)
        total += float(np.mean(np.sum(excess**2, axis=1)))
    return total * step


def mc_check(
    inst: Instance,
    values: np.ndarray,
    config: McConfig | None = None,
) -> McReport:
    """Compare closed-form overload probabilities and objectives with
    simulation.

    Passes when at least 99 percent of profile cells agree within three
    standard errors, the sign test over cells large enough to resolve a
    direction finds no systematic bias, and both objectives match within
    five percent.
    """
    config = config or McConfig()
    n = config.samples

    marginals = propagate_marginals(inst, values)
    profile = congestion_profile(inst, marginals)
    c1_closed = delay_cost(inst, marginals)
    c2_closed = congestion_cost(profile)

    trajectories = sample_trajectories(inst, values, n, config.seed)
    occupancy = _empirical_occupancy(inst, trajectories, n)

    cells_total = 0
    cells_within = 0
    max_sigma = 0.0
    diffs: list[float] = []
    for sector_profile in profile.sectors:
        counts = occupancy[sector_profile.sector_id]
        over = (counts > sector_profile.capacity).mean(axis=0)
        p_closed = sector_profile.prob_over
        variance = p_closed * (1.0 - p_closed)
        se = np.sqrt(np.maximum(variance, 0.0) / n)
        gap = np.abs(over - p_closed)
        ok = gap <= AGREE_SIGMA * se + 1e-12
        cells_total += ok.size
        cells_within += int(ok.sum())
        with np.errstate(invalid="ignore", divide="ignore"):
            sigma = np.where(se > 0, gap / se, np.where(gap > 0, np.inf, 0.0))
        max_sigma = max(max_sigma, float(sigma.max(initial=0.0)))
        # Cells too small to resolve a direction at this sample size would
        # all lean the same way and poison the sign test; skip them.
        resolvable = (n * variance >= MIN_CELL_VARIANCE) & (over != p_closed)
        diffs.extend((over - p_closed)[resolvable].tolist())

    sign_p = _sign_test_p(np.asarray(diffs))

    c1_emp = _empirical_delay(inst, trajectories)
    c2_emp = _empirical_congestion(inst, occupancy)

    def rel(a: float, b: float) -> float:
        return abs(a - b) / max(abs(b), 1e-12)

    agreement = cells_within / cells_total if cells_total else 1.0
    passed = (
        agreement >= 0.99
        and sign_p >= SIGN_TEST_P
        and rel(c1_emp, c1_closed) <= OBJECTIVE_RTOL
        and rel(c2_emp, c2_closed) <= OBJECTIVE_RTOL
    )
    return McReport(
        samples=n,
        cells_total=cells_total,
        cells_within=cells_within,
        agreement_fraction=agreement,
        max_sigma=max_sigma,
        sign_test_p=sign_p,
        c1_closed=c1_closed,
        c1_empirical=c1_emp,
        c2_closed=c2_closed,
        c2_empirical=c2_emp,
        passed=passed,
    )
