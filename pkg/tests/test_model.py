import json

import numpy as np
import pytest

from stratoplan.errors import ConstraintError, FormatError, ModelError
from stratoplan.model import (
    BenchmarkParams,
    FlightPlan,
    Instance,
    Sector,
    SectorCrossing,
    assert_feasible,
    feasible_box,
    generate_benchmark,
    instance_checksum,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_schedule,
    nominal_schedule,
    save_instance,
    save_schedule,
)
from stratoplan.timeprob import TimeGrid


def tiny_instance():
    """One two-leg flight through one sector, grid sized generously."""
    flight = FlightPlan(
        id="F01",
        durations=(10.0, 10.0),
        entry_window=(0.0, 15.0),
        scheduled_arrival=27.5,
    )
    sector = Sector(
        id="S01", capacity=1, crossings=(SectorCrossing("F01", 0, 1),)
    )
    grid = TimeGrid.cover(-1.0, 60.0, 1.0)
    return Instance(grid=grid, flights=(flight,), sectors=(sector,))


class TestFlightPlan:
    def test_waypoints_count_legs_plus_one(self):
        f = FlightPlan("A", (5.0, 6.0, 7.0), (0.0, 10.0), 40.0)
        assert f.waypoint_count == 4

    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            FlightPlan("", (5.0,), (0.0, 10.0), 20.0)
        with pytest.raises(ValueError):
            FlightPlan("A", (), (0.0, 10.0), 20.0)
        with pytest.raises(ValueError):
            FlightPlan("A", (0.0,), (0.0, 10.0), 20.0)
        with pytest.raises(ValueError):
            FlightPlan("A", (5.0,), (10.0, 0.0), 20.0)


class TestInstanceValidation:
    def test_duplicate_flight_ids_rejected(self):
        f = FlightPlan("F01", (10.0,), (0.0, 5.0), 15.0)
        grid = TimeGrid.cover(-1.0, 40.0, 1.0)
        with pytest.raises(ModelError):
            Instance(grid=grid, flights=(f, f), sectors=())

    def test_crossing_must_reference_known_flight(self):
        f = FlightPlan("F01", (10.0,), (0.0, 5.0), 15.0)
        s = Sector("S01", 1, (SectorCrossing("F99", 0, 1),))
        grid = TimeGrid.cover(-1.0, 40.0, 1.0)
        with pytest.raises(ModelError):
            Instance(grid=grid, flights=(f,), sectors=(s,))

    def test_crossing_indices_must_be_ordered_and_in_range(self):
        f = FlightPlan("F01", (10.0,), (0.0, 5.0), 15.0)
        grid = TimeGrid.cover(-1.0, 40.0, 1.0)
        for i, j in ((1, 0), (0, 0), (0, 2)):
            s = Sector("S01", 1, (SectorCrossing("F01", i, j),))
            with pytest.raises(ModelError):
                Instance(grid=grid, flights=(f,), sectors=(s,))

    def test_grid_must_cover_reachable_times(self):
        f = FlightPlan("F01", (10.0,), (0.0, 5.0), 15.0)
        short = TimeGrid.cover(0.0, 12.0, 1.0)
        with pytest.raises(ModelError):
            Instance(grid=short, flights=(f,), sectors=())


class TestFeasibleBox:
    def test_pacing_recursion(self):
        inst = tiny_instance()
        box = feasible_box(inst)
        assert np.allclose(box.lo, [0.0, 9.0, 18.0])
        assert np.allclose(box.hi, [15.0, 25.5, 36.0])

    def test_widths_never_shrink_along_a_flight(self, benchmark):
        box = feasible_box(benchmark)
        for i, f in enumerate(benchmark.flights):
            start = benchmark.schedule_offsets[i]
            w = (box.hi - box.lo)[start : start + f.waypoint_count]
            assert np.all(np.diff(w) >= -1e-12)

    def test_nominal_is_strictly_interior(self, benchmark):
        box = feasible_box(benchmark)
        nom = nominal_schedule(benchmark)
        assert np.all(nom > box.lo + 1.0)
        assert np.all(nom < box.hi - 1.0)

    def test_clamp_and_contains(self):
        inst = tiny_instance()
        box = feasible_box(inst)
        wild = np.array([-5.0, 30.0, 20.0])
        clamped = box.clamp(wild)
        assert box.contains(clamped)
        assert not box.contains(wild)

    def test_assert_feasible_names_offenders(self):
        inst = tiny_instance()
        with pytest.raises(ConstraintError, match=r"\[0\]"):
            assert_feasible(inst, np.array([-3.0, 12.0, 22.0]))
        with pytest.raises(ConstraintError):
            assert_feasible(inst, np.array([1.0, 12.0]))  # wrong length

    def test_nominal_hits_scheduled_arrival(self):
        inst = tiny_instance()
        nom = nominal_schedule(inst)
        assert nom[-1] == inst.flights[0].scheduled_arrival
        assert np.allclose(np.diff(nom), inst.flights[0].durations)


class TestBenchmark:
    def test_fleet_and_sector_inventory(self, benchmark):
        assert len(benchmark.flights) == 24
        assert len(benchmark.sectors) == 11
        wp = [f.waypoint_count for f in benchmark.flights]
        assert wp[:16] == [4] * 16
        assert wp[16:] == [3] * 8

    def test_capacity_is_crossings_minus_one(self, benchmark):
        for s in benchmark.sectors:
            assert s.capacity == len(s.crossings) - 1

    def test_root_sector_collects_everyone(self, benchmark):
        root = benchmark.sectors[-1]
        assert len(root.crossings) == 24
        assert root.capacity == 23
        flights = {c.flight_id for c in root.crossings}
        assert flights == {f.id for f in benchmark.flights}
        for c in root.crossings:
            f = next(f for f in benchmark.flights if f.id == c.flight_id)
            # the root is always the final leg
            assert (c.entry_index, c.exit_index) == (f.waypoint_count - 2, f.waypoint_count - 1)

    def test_every_other_sector_has_four_crossings(self, benchmark):
        for s in benchmark.sectors[:-1]:
            assert len(s.crossings) == 4
            assert s.capacity == 3

    def test_same_leaf_flights_two_minutes_apart(self, benchmark):
        for a, b in zip(benchmark.flights[0::2], benchmark.flights[1::2]):
            gap = b.entry_window[0] - a.entry_window[0]
            assert gap == pytest.approx(2.0)

    def test_windows_are_minus_5_plus_10(self, benchmark):
        nom = nominal_schedule(benchmark)
        for i, f in enumerate(benchmark.flights):
            t = nom[benchmark.schedule_offsets[i]]
            assert f.entry_window[0] == pytest.approx(t - 5.0)
            assert f.entry_window[1] == pytest.approx(t + 10.0)

    def test_seed_controls_stagger(self):
        a = generate_benchmark(seed=0)
        b = generate_benchmark(seed=0)
        c = generate_benchmark(seed=1)
        assert instance_to_dict(a) == instance_to_dict(b)
        assert instance_to_dict(a) != instance_to_dict(c)

    def test_grid_covers_all_supports(self, benchmark):
        for f in benchmark.flights:
            reach = f.entry_window[1] + sum(
                d + f.enroute_support_len / 2 for d in f.durations
            )
            assert benchmark.grid.end >= reach
            assert benchmark.grid.origin <= f.entry_window[0]

    def test_params_knobs(self):
        p = BenchmarkParams(stagger_span=0.0, step=0.5)
        inst = generate_benchmark(seed=3, params=p)
        assert inst.grid.step == 0.5
        # zero stagger: leaf entries differ only by the same-leaf gap
        firsts = [f.entry_window[0] for f in inst.flights[0::2]]
        assert len(set(round(v, 9) for v in firsts)) == 1


class TestSerialization:
    def test_roundtrip_preserves_everything(self, benchmark, tmp_path):
        path = tmp_path / "inst.json"
        save_instance(path, benchmark)
        back = load_instance(path)
        assert instance_to_dict(back) == instance_to_dict(benchmark)
        assert instance_checksum(back) == instance_checksum(benchmark)

    def test_save_is_byte_deterministic(self, benchmark, tmp_path):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_instance(p1, benchmark)
        save_instance(p2, benchmark)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rejects_unknown_format_version(self):
        doc = instance_to_dict(tiny_instance())
        doc["format"] = 99
        with pytest.raises(FormatError):
            instance_from_dict(doc)

    def test_rejects_waypoint_count_mismatch(self):
        doc = instance_to_dict(tiny_instance())
        doc["flights"][0]["waypoint_count"] = 7
        with pytest.raises(FormatError):
            instance_from_dict(doc)

    def test_rejects_malformed_document(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            load_instance(path)
        path.write_text(json.dumps({"format": 1, "flights": "nope"}))
        with pytest.raises(FormatError):
            load_instance(path)


class TestScheduleFiles:
    def test_roundtrip(self, benchmark, tmp_path):
        path = tmp_path / "sched.json"
        nom = nominal_schedule(benchmark)
        save_schedule(path, benchmark, nom)
        back = load_schedule(path, benchmark)
        assert np.array_equal(back, nom)

    def test_wrong_instance_rejected(self, benchmark, tmp_path):
        other = generate_benchmark(seed=5)
        path = tmp_path / "sched.json"
        save_schedule(path, other, nominal_schedule(other))
        with pytest.raises(FormatError, match="checksum|instance"):
            load_schedule(path, benchmark)

    def test_wrong_length_rejected(self, benchmark, tmp_path):
        path = tmp_path / "sched.json"
        doc = {
            "format": 1,
            "instance_checksum": instance_checksum(benchmark),
            "targets": [1.0, 2.0],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(FormatError, match="targets"):
            load_schedule(path, benchmark)


class TestRegrid:
    def test_with_step_keeps_problem_fixes_grid(self, benchmark):
        fine = benchmark.with_step(0.5)
        assert fine.grid.step == 0.5
        assert fine.flights == benchmark.flights
        assert fine.sectors == benchmark.sectors
        assert fine.grid.origin <= benchmark.grid.origin + 1.0
        assert fine.grid.end >= max(
            f.entry_window[1] + sum(d + f.enroute_support_len / 2 for d in f.durations)
            for f in benchmark.flights
        )

    def test_dimension_and_offsets(self, benchmark):
        assert benchmark.dimension == 16 * 4 + 8 * 3
        offs = benchmark.schedule_offsets
        assert offs[0] == 0
        nom = nominal_schedule(benchmark)
        for i, f in enumerate(benchmark.flights):
            got = benchmark.targets_for(nom, i)
            assert got.shape == (f.waypoint_count,)
