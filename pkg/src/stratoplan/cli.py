"""Command-line front end.

Subcommands mirror the pipeline stages: gen (synthetic benchmark),
propagate (overflight-time marginals), congestion (presence and overload
profiles), evaluate (objective vector), optimize (evolutionary search),
mc-check (simulation referee). Exit codes: 0 success, 2 usage, 3 invalid
input or failed check, 4 filesystem trouble.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import HorizonError
from .mcoracle import McConfig, mc_check
from .model import (
    BenchmarkParams,
    Instance,
    generate_benchmark,
    instance_checksum,
    load_instance,
    load_schedule,
    nominal_schedule,
    save_instance,
)
from .moea import MoeaConfig, run_nsga2
from .objectives import evaluate
from .congestion import congestion_profile
from .propagate import propagate_marginals


def _fmt(x: float) -> str:
    # repr round-trips doubles exactly; never truncate results in CSV
    return repr(float(x))


def _load_problem(args: argparse.Namespace) -> tuple[Instance, np.ndarray]:
    """Instance plus schedule vector, honoring --schedule and --step.

    The schedule checksum is verified against the instance as stored on
    disk; regridding happens after, so a coarser or finer analysis grid
    does not orphan existing schedule files.
    """
    inst = load_instance(args.instance)
    if getattr(args, "schedule", None):
        values = load_schedule(args.schedule, inst)
    else:
        values = nominal_schedule(inst)
    if getattr(args, "step", None):
        inst = inst.with_step(args.step)
    return inst, values


def _write_manifest(outdir: Path, command: str, inst: Instance, files: list[str], **params) -> None:
    doc = {
        "command": command,
        "instance_checksum": instance_checksum(inst),
        "files": sorted(files),
        "parameters": params,
    }
    (outdir / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _cmd_gen(args: argparse.Namespace) -> int:
    params = BenchmarkParams(stagger_span=args.stagger_span, step=args.step)
    inst = generate_benchmark(seed=args.seed, params=params)
    save_instance(args.out, inst)
    print(f"wrote {args.out} ({len(inst.flights)} flights, {len(inst.sectors)} sectors, "
          f"{inst.grid.bins} bins)")
    return 0


def _cmd_propagate(args: argparse.Namespace) -> int:
    inst, values = _load_problem(args)
    marginals = propagate_marginals(inst, values)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "marginals.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flight_id", "waypoint_index", "bin_start_minutes", "mass"])
        for flight in inst.flights:
            for wp, pmf in enumerate(marginals[flight.id]):
                for k in np.flatnonzero(pmf.mass):
                    w.writerow(
                        [flight.id, wp, _fmt(pmf.grid.bin_start(int(k))), _fmt(pmf.mass[k])]
                    )
    _write_manifest(
        outdir, "propagate", inst, ["marginals.csv"],
        step=inst.grid.step, schedule=bool(getattr(args, "schedule", None)),
    )
    print(f"wrote {outdir / 'marginals.csv'}")
    return 0


def _cmd_congestion(args: argparse.Namespace) -> int:
    inst, values = _load_problem(args)
    marginals = propagate_marginals(inst, values)
    profile = congestion_profile(inst, marginals)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = profile.grid
    sectors_by_id = {s.id: s for s in inst.sectors}

    with open(outdir / "presence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sector_id", "flight_id", "bin_start_minutes", "presence_probability"])
        for sp in profile.sectors:
            crossings = sectors_by_id[sp.sector_id].crossings
            for crossing, q in zip(crossings, sp.presence):
                for k in np.flatnonzero(q):
                    w.writerow(
                        [sp.sector_id, crossing.flight_id, _fmt(grid.bin_start(int(k))), _fmt(q[k])]
                    )

    with open(outdir / "congestion.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["sector_id", "bin_start_minutes", "prob_over_capacity"]
        header += [f"excess_{m}" for m in range(1, args.tail + 1)]
        w.writerow(header)
        for sp in profile.sectors:
            for k in range(grid.bins):
                row = [sp.sector_id, _fmt(grid.bin_start(k)), _fmt(sp.prob_over[k])]
                for m in range(args.tail):
                    row.append(_fmt(sp.tail[m, k]) if m < sp.tail.shape[0] else _fmt(0.0))
                w.writerow(row)

    _write_manifest(
        outdir, "congestion", inst, ["presence.csv", "congestion.csv"],
        step=inst.grid.step, tail=args.tail,
        schedule=bool(getattr(args, "schedule", None)),
    )
    print(f"wrote {outdir / 'presence.csv'} and {outdir / 'congestion.csv'}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    inst, values = _load_problem(args)
    result = evaluate(inst, values, beta=args.beta)
    print("c1,c2")
    print(f"{_fmt(result.c1)},{_fmt(result.c2)}")
    return 0


def _cmd_optimize(args: argparse.Namespace) -> int:
    inst, _ = _load_problem(args)
    config = MoeaConfig(
        population_size=args.population,
        generations=args.generations,
        crossover_prob=args.crossover_prob,
        mutation_prob=args.mutation_prob,
        crossover_eta=args.crossover_eta,
        mutation_eta=args.mutation_eta,
        seed=args.seed,
    )
    result = run_nsga2(inst, config)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    dim = inst.dimension
    with open(outdir / "archive.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["c1", "c2"] + [f"t{i:03d}" for i in range(dim)])
        for ind in result.archive:
            w.writerow(
                [_fmt(ind.objectives.c1), _fmt(ind.objectives.c2)]
                + [_fmt(v) for v in ind.values]
            )

    with open(outdir / "stats.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "front_size", "hypervolume", "best_c1", "best_c2"])
        for s in result.history:
            w.writerow(
                [s.generation, s.front_size, _fmt(s.hypervolume), _fmt(s.best_c1), _fmt(s.best_c2)]
            )

    _write_manifest(
        outdir, "optimize", inst, ["archive.csv", "stats.csv"],
        population=config.population_size, generations=config.generations,
        seed=config.seed, step=inst.grid.step,
        reference_point=list(result.reference_point),
    )
    print(
        f"archive of {len(result.archive)} schedules, "
        f"final hypervolume {result.history[-1].hypervolume:.6g}; wrote {outdir}"
    )
    return 0


def _cmd_mc_check(args: argparse.Namespace) -> int:
    inst, values = _load_problem(args)
    report = mc_check(inst, values, McConfig(samples=args.samples, seed=args.seed))
    print(f"samples={report.samples}")
    print(f"cells_total={report.cells_total}")
    print(f"cells_within={report.cells_within}")
    print(f"agreement_fraction={report.agreement_fraction:.6f}")
    print(f"max_sigma={report.max_sigma:.3f}")
    print(f"sign_test_p={report.sign_test_p:.6g}")
    print(f"c1_closed={_fmt(report.c1_closed)}")
    print(f"c1_empirical={_fmt(report.c1_empirical)}")
    print(f"c2_closed={_fmt(report.c2_closed)}")
    print(f"c2_empirical={_fmt(report.c2_empirical)}")
    print(f"verdict={'pass' if report.passed else 'fail'}")
    return 0 if report.passed else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratoplan",
        description="Stochastic strategic planning of flight schedules over congested sectors.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_args(p: argparse.ArgumentParser, schedule: bool = True) -> None:
        p.add_argument("--instance", required=True, help="instance JSON file")
        if schedule:
            p.add_argument(
                "--schedule", help="schedule JSON (default: the nominal on-time schedule)"
            )
        p.add_argument("--step", type=float, help="re-discretize with this bin width (minutes)")

    p = sub.add_parser("gen", help="generate the synthetic approach-airspace benchmark")
    p.add_argument("--out", required=True, help="where to write the instance JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stagger-span", type=float, default=6.0,
                   help="width of the per-leaf random stagger (minutes)")
    p.add_argument("--step", type=float, default=1.0, help="bin width (minutes)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("propagate", help="write per-waypoint overflight-time marginals")
    add_problem_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_propagate)

    p = sub.add_parser("congestion", help="write presence and overload-probability profiles")
    add_problem_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tail", type=int, default=0,
                   help="also write the first N exceedance columns")
    p.set_defaults(func=_cmd_congestion)

    p = sub.add_parser("evaluate", help="print the objective vector for a schedule")
    add_problem_args(p)
    p.add_argument("--beta", type=float, default=2.0, help="lateness exponent")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("optimize", help="approximate the Pareto front of schedules")
    add_problem_args(p, schedule=False)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--population", type=int, default=100)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--crossover-prob", type=float, default=0.9)
    p.add_argument("--mutation-prob", type=float, default=None,
                   help="per-component rate (default 1/dimension)")
    p.add_argument("--crossover-eta", type=float, default=15.0)
    p.add_argument("--mutation-eta", type=float, default=20.0)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("mc-check", help="cross-check closed forms against simulation")
    add_problem_args(p)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mc_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, HorizonError) as exc:
        # covers format, model, constraint, grid, and support errors
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
