"""Flight plans, sectors, feasibility, file formats, and the benchmark instance.

An Instance bundles a time grid, a set of flight plans (one target time per
waypoint is the decision vector), and sectors defined by entry/exit waypoint
pairs of the flights that cross them. Instances are treated as immutable
after construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConstraintError, FormatError, ModelError
from .timeprob import TimeGrid

# Pacing limits for a target relative to the previous waypoint's box: a leg
# may be flown up to 10% faster or 5% slower than its nominal duration.
SPEEDUP_FACTOR = 0.9
SLOWDOWN_FACTOR = 1.05

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FlightPlan:
    """One flight: waypoint chain with nominal leg durations, in minutes.

    The flight has len(durations) + 1 waypoints. entry_window bounds the
    first target; scheduled_arrival is the on-time threshold at the last
    waypoint. Support lengths size the entry and en-route uncertainty.
    """

    id: str
    durations: tuple[float, ...]
    entry_window: tuple[float, float]
    scheduled_arrival: float
    entry_support_len: float = 15.0
    enroute_support_len: float = 8.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "durations", tuple(float(d) for d in self.durations))
        object.__setattr__(self, "entry_window", tuple(float(v) for v in self.entry_window))
        if not self.id:
            raise ModelError("flight id must be nonempty")
        if len(self.durations) < 1:
            raise ModelError(f"flight {self.id}: need at least one leg")
        if any(d <= 0 for d in self.durations):
            raise ModelError(f"flight {self.id}: nonpositive leg duration")
        lo, hi = self.entry_window
        if not lo < hi:
            raise ModelError(f"flight {self.id}: empty entry window [{lo}, {hi}]")
        if self.entry_support_len <= 0 or self.enroute_support_len <= 0:
            raise ModelError(f"flight {self.id}: support lengths must be positive")

    @property
    def waypoint_count(self) -> int:
        return len(self.durations) + 1


@dataclass(frozen=True)
class SectorCrossing:
    """A flight occupies the sector from waypoint entry_index to exit_index (0-based)."""

    flight_id: str
    entry_index: int
    exit_index: int


@dataclass(frozen=True)
class Sector:
    id: str
    capacity: int
    crossings: tuple[SectorCrossing, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "crossings", tuple(self.crossings))
        if self.capacity < 1:
            raise ModelError(f"sector {self.id}: capacity must be at least 1")


@dataclass
class Instance:
    """A planning problem: grid, flights, sectors. Immutable by convention."""

    grid: TimeGrid
    flights: tuple[FlightPlan, ...]
    sectors: tuple[Sector, ...]

    def __post_init__(self) -> None:
        self.flights = tuple(self.flights)
        self.sectors = tuple(self.sectors)
        self.validate()

    def validate(self) -> None:
        ids = [f.id for f in self.flights]
        if len(set(ids)) != len(ids):
            raise ModelError("duplicate flight ids")
        sids = [s.id for s in self.sectors]
        if len(set(sids)) != len(sids):
            raise ModelError("duplicate sector ids")
        by_id = {f.id: f for f in self.flights}
        for s in self.sectors:
            for c in s.crossings:
                f = by_id.get(c.flight_id)
                if f is None:
                    raise ModelError(f"sector {s.id}: unknown flight {c.flight_id}")
                if not 0 <= c.entry_index < c.exit_index <= f.waypoint_count - 1:
                    raise ModelError(
                        f"sector {s.id}: crossing indices ({c.entry_index}, {c.exit_index}) "
                        f"invalid for flight {c.flight_id} with {f.waypoint_count} waypoints"
                    )
        # The grid must cover every feasible box plus the en-route support tail,
        # so that marginal modes can never be pushed off the horizon.
        for f in self.flights:
            lo, hi = f.entry_window
            reach = hi + SLOWDOWN_FACTOR * sum(f.durations) + f.enroute_support_len / 2
            if self.grid.origin > lo or self.grid.end < reach:
                raise ModelError(
                    f"grid span [{self.grid.origin}, {self.grid.end}] does not cover "
                    f"flight {f.id} (needs [{lo}, {reach}])"
                )

    @cached_property
    def flight_position(self) -> dict[str, int]:
        return {f.id: i for i, f in enumerate(self.flights)}

    @cached_property
    def schedule_offsets(self) -> tuple[int, ...]:
        """Start index of each flight's block in the flattened schedule vector."""
        offs, at = [], 0
        for f in self.flights:
            offs.append(at)
            at += f.waypoint_count
        return tuple(offs)

    @property
    def dimension(self) -> int:
        return sum(f.waypoint_count for f in self.flights)

    def targets_for(self, values: np.ndarray, flight_index: int) -> np.ndarray:
        """The slice of a flattened schedule belonging to one flight."""
        start = self.schedule_offsets[flight_index]
        return values[start : start + self.flights[flight_index].waypoint_count]

    def with_step(self, step: float) -> "Instance":
        """Same problem on a regridded horizon (accuracy knob)."""
        lo = min(f.entry_window[0] for f in self.flights)
        hi = max(
            f.entry_window[1] + sum(d + f.enroute_support_len / 2 for d in f.durations)
            for f in self.flights
        )
        grid = TimeGrid.cover(lo - step, hi + step, step)
        return Instance(grid=grid, flights=self.flights, sectors=self.sectors)


@dataclass(frozen=True)
class FeasibleBox:
    """Per-component bounds for the flattened schedule vector.

    box(first) is the entry window; each later waypoint's box is the previous
    one advanced by the nominal duration scaled by the pacing limits, so the
    widths never decrease along a flight.
    """

    lo: np.ndarray
    hi: np.ndarray
    offsets: tuple[int, ...]

    def __post_init__(self) -> None:
        for name in ("lo", "hi"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def clamp(self, values: np.ndarray) -> np.ndarray:
        return np.clip(values, self.lo, self.hi)

    def contains(self, values: np.ndarray, tol: float = 1e-9) -> bool:
        values = np.asarray(values, dtype=np.float64)
        return bool(np.all(values >= self.lo - tol) and np.all(values <= self.hi + tol))


def feasible_box(inst: Instance) -> FeasibleBox:
    lo, hi = [], []
    for f in inst.flights:
        a, b = f.entry_window
        lo.append(a)
        hi.append(b)
        for d in f.durations:
            a += SPEEDUP_FACTOR * d
            b += SLOWDOWN_FACTOR * d
            lo.append(a)
            hi.append(b)
    return FeasibleBox(np.array(lo), np.array(hi), inst.schedule_offsets)


def nominal_schedule(inst: Instance) -> np.ndarray:
    """Targets that hit scheduled_arrival exactly with nominal leg durations."""
    out = np.empty(inst.dimension)
    at = 0
    for f in inst.flights:
        t = f.scheduled_arrival - sum(f.durations)
        out[at] = t
        for i, d in enumerate(f.durations):
            t += d
            out[at + 1 + i] = t
        at += f.waypoint_count
    return out


def assert_feasible(inst: Instance, values: np.ndarray, tol: float = 1e-9) -> None:
    box = feasible_box(inst)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (inst.dimension,):
        raise ConstraintError(
            f"schedule length {values.shape} does not match dimension {inst.dimension}"
        )
    if not box.contains(values, tol):
        bad = np.where((values < box.lo - tol) | (values > box.hi + tol))[0]
        raise ConstraintError(f"schedule outside feasible box at components {bad[:8].tolist()}")


# ---------------------------------------------------------------------------
# Benchmark instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkParams:
    """Knobs for the synthetic approach-airspace benchmark."""

    entry_base: float = 0.0
    leaf_gap: float = 2.0
    stagger_span: float = 6.0
    sector_minutes: float = 10.0
    entry_support_len: float = 15.0
    enroute_support_len: float = 8.0
    window_before: float = 5.0
    window_after: float = 10.0
    step: float = 1.0


def generate_benchmark(seed: int = 0, params: BenchmarkParams | None = None) -> Instance:
    """Deterministic 24-flight, 11-sector merge-tree toward a single runway.

    Twelve entry fixes feed the tree, two flights per fix separated by
    leaf_gap. The first eight fixes route fix -> pair merge -> handoff ->
    root (4 waypoints); the last four route fix -> pair merge -> root
    (3 waypoints). Every sector's capacity is one less than the number of
    flights crossing it, so simultaneous convergence always congests.
    """
    p = params or BenchmarkParams()
    rng = np.random.default_rng(seed)
    jitter = rng.uniform(0.0, p.stagger_span, size=12)

    flights: list[FlightPlan] = []
    for leaf in range(12):
        legs = 3 if leaf < 8 else 2
        for k in range(2):
            target = p.entry_base + jitter[leaf] + k * p.leaf_gap
            durations = (p.sector_minutes,) * legs
            flights.append(
                FlightPlan(
                    id=f"F{len(flights) + 1:02d}",
                    durations=durations,
                    entry_window=(target - p.window_before, target + p.window_after),
                    scheduled_arrival=target + legs * p.sector_minutes,
                    entry_support_len=p.entry_support_len,
                    enroute_support_len=p.enroute_support_len,
                )
            )

    def sector(sid: str, members: list[int], i: int, j: int) -> Sector:
        crossings = tuple(SectorCrossing(flights[m].id, i, j) for m in members)
        return Sector(id=sid, capacity=len(crossings) - 1, crossings=crossings)

    sectors: list[Sector] = []
    # Pair-merge sectors: 4 flights each (two fixes, two flights per fix).
    for q in range(4):
        sectors.append(sector(f"S{q + 1:02d}", list(range(4 * q, 4 * q + 4)), 0, 1))
    for q in range(2):
        sectors.append(sector(f"S{q + 5:02d}", list(range(16 + 4 * q, 20 + 4 * q)), 0, 1))
    # Handoff sectors on the long side, one per pair merge.
    for q in range(4):
        sectors.append(sector(f"S{q + 7:02d}", list(range(4 * q, 4 * q + 4)), 1, 2))
    # Root sector in front of the runway: everyone, on their final leg.
    root = tuple(
        SectorCrossing(f.id, f.waypoint_count - 2, f.waypoint_count - 1) for f in flights
    )
    sectors.append(Sector(id="S11", capacity=len(root) - 1, crossings=root))

    lo = min(f.entry_window[0] for f in flights)
    hi = max(
        f.entry_window[1] + sum(d + p.enroute_support_len / 2 for d in f.durations)
        for f in flights
    )
    grid = TimeGrid.cover(lo - p.step, hi + p.step, p.step)
    return Instance(grid=grid, flights=tuple(flights), sectors=tuple(sectors))


# ---------------------------------------------------------------------------
# Serialization (format 1)
# ---------------------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    return {
        "format": FORMAT_VERSION,
        "grid": {"origin": inst.grid.origin, "step": inst.grid.step, "bins": inst.grid.bins},
        "flights": [
            {
                "id": f.id,
                "waypoint_count": f.waypoint_count,
                "durations": list(f.durations),
                "entry_window": list(f.entry_window),
                "scheduled_arrival": f.scheduled_arrival,
                "entry_support_len": f.entry_support_len,
                "enroute_support_len": f.enroute_support_len,
            }
            for f in inst.flights
        ],
        "sectors": [
            {
                "id": s.id,
                "capacity": s.capacity,
                "crossings": [
                    {
                        "flight": c.flight_id,
                        "entry_waypoint_index": c.entry_index,
                        "exit_waypoint_index": c.exit_index,
                    }
                    for c in s.crossings
                ],
            }
            for s in inst.sectors
        ],
    }


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_VERSION:
        raise FormatError(f"unsupported instance format: {doc.get('format')!r}")
    try:
        g = doc["grid"]
        grid = TimeGrid(origin=float(g["origin"]), step=float(g["step"]), bins=int(g["bins"]))
        flights = []
        for fd in doc["flights"]:
            f = FlightPlan(
                id=str(fd["id"]),
                durations=tuple(fd["durations"]),
                entry_window=tuple(fd["entry_window"]),
                scheduled_arrival=float(fd["scheduled_arrival"]),
                entry_support_len=float(fd["entry_support_len"]),
                enroute_support_len=float(fd["enroute_support_len"]),
            )
            if f.waypoint_count != int(fd["waypoint_count"]):
                raise FormatError(
                    f"flight {f.id}: waypoint_count {fd['waypoint_count']} does not "
                    f"match {len(f.durations)} durations"
                )
            flights.append(f)
        sectors = [
            Sector(
                id=str(sd["id"]),
                capacity=int(sd["capacity"]),
                crossings=tuple(
                    SectorCrossing(
                        flight_id=str(cd["flight"]),
                        entry_index=int(cd["entry_waypoint_index"]),
                        exit_index=int(cd["exit_waypoint_index"]),
                    )
                    for cd in sd["crossings"]
                ),
            )
            for sd in doc["sectors"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"malformed instance document: {exc}") from exc
    return Instance(grid=grid, flights=tuple(flights), sectors=tuple(sectors))


def instance_checksum(inst: Instance) -> str:
    """Content hash of the canonical serialization, independent of file layout."""
    canon = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def save_instance(path: str | Path, inst: Instance) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n")


def load_instance(path: str | Path) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return instance_from_dict(doc)


def save_schedule(path: str | Path, inst: Instance, values: np.ndarray) -> None:
    doc = {
        "format": FORMAT_VERSION,
        "instance_checksum": instance_checksum(inst),
        "targets": [float(v) for v in np.asarray(values).ravel()],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_schedule(path: str | Path, inst: Instance) -> np.ndarray:
    """Read a schedule vector, refusing one written for a different instance."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_VERSION:
        raise FormatError(f"unsupported schedule format: {doc.get('format')!r}")
    want = instance_checksum(inst)
    got = doc.get("instance_checksum")
    if got != want:
        raise FormatError(f"schedule targets instance {got}, expected {want}")
    values = np.asarray(doc.get("targets", []), dtype=np.float64)
    if values.shape != (inst.dimension,):
        raise FormatError(
            f"schedule has {values.size} targets, instance needs {inst.dimension}"
        )
    return values
