import time

import pytest

import stratoplan as sp
from stratoplan.moea import MoeaConfig, run_nsga2


@pytest.fixture(scope="session")
def benchmark():
    return sp.generate_benchmark(seed=0)


@pytest.fixture(scope="session")
def nominal_values(benchmark):
    return sp.nominal_schedule(benchmark)


@pytest.fixture(scope="session")
def nominal_marginals(benchmark, nominal_values):
    return sp.propagate_marginals(benchmark, nominal_values)


@pytest.fixture(scope="session")
def full_run(benchmark):
    """The reference optimizer run (population 100, 100 generations).

    Takes on the order of a minute; shared by every long-horizon check.
    Returns (result, wall seconds).
    """
    t0 = time.perf_counter()
    result = run_nsga2(benchmark, MoeaConfig(population_size=100, generations=100, seed=0))
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def mc_report(benchmark, nominal_values):
    """Simulation cross-check of the closed forms at 100k samples."""
    t0 = time.perf_counter()
    report = sp.mc_check(benchmark, nominal_values, sp.McConfig(samples=100_000, seed=0))
    return report, time.perf_counter() - t0
