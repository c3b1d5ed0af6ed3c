"""Strategic flight scheduling under overflight-time uncertainty.

Pipeline: describe flights and sectors (model), push triangular timing
uncertainty through each flight's waypoint chain (propagate), turn the
marginals into sector overload probabilities (congestion), reduce to a
delay/congestion objective pair (objectives), search the schedule space
for the Pareto front (moea), and audit everything against plain Monte
Carlo simulation (mcoracle).
"""

from .congestion import (
    CongestionProfile,
    SectorProfile,
    congestion_profile,
    congestion_tail,
    enumeration_count,
    poisson_binomial_pmf,
    presence_probability,
    presence_profile,
)
from .errors import (
    ConstraintError,
    DegenerateSupportError,
    FormatError,
    GridRangeError,
    HorizonError,
    ModelError,
)
from .mcoracle import McConfig, McReport, mc_check, sample_trajectories
from .model import (
    BenchmarkParams,
    FeasibleBox,
    FlightPlan,
    Instance,
    Sector,
    SectorCrossing,
    assert_feasible,
    feasible_box,
    generate_benchmark,
    instance_checksum,
    load_instance,
    load_schedule,
    nominal_schedule,
    save_instance,
    save_schedule,
)
from .moea import (
    GenerationStats,
    MoeaConfig,
    Nsga2Result,
    crowding_distance,
    fast_nondominated_sort,
    hypervolume_2d,
    run_nsga2,
)
from .objectives import ObjectiveVector, congestion_cost, delay_cost, dominates, evaluate
from .propagate import ConditionalKernel, build_kernel, entry_marginal, propagate_marginals
from .timeprob import (
    Pmf,
    TimeGrid,
    TriangularSpec,
    cdf,
    cdf_at_edges,
    discretize_triangular,
    mean_of,
    point_mass,
    skewness_of,
    triangular_cdf,
    variance_of,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkParams",
    "ConditionalKernel",
    "CongestionProfile",
    "ConstraintError",
    "DegenerateSupportError",
    "FeasibleBox",
    "FlightPlan",
    "FormatError",
    "GenerationStats",
    "GridRangeError",
    "HorizonError",
    "Instance",
    "McConfig",
    "McReport",
    "ModelError",
    "MoeaConfig",
    "Nsga2Result",
    "ObjectiveVector",
    "Pmf",
    "Sector",
    "SectorCrossing",
    "SectorProfile",
    "TimeGrid",
    "TriangularSpec",
    "assert_feasible",
    "build_kernel",
    "cdf",
    "cdf_at_edges",
    "congestion_cost",
    "congestion_profile",
    "congestion_tail",
    "crowding_distance",
    "delay_cost",
    "discretize_triangular",
    "dominates",
    "entry_marginal",
    "enumeration_count",
    "evaluate",
    "fast_nondominated_sort",
    "feasible_box",
    "generate_benchmark",
    "hypervolume_2d",
    "instance_checksum",
    "load_instance",
    "load_schedule",
    "mc_check",
    "mean_of",
    "nominal_schedule",
    "point_mass",
    "poisson_binomial_pmf",
    "presence_probability",
    "presence_profile",
    "propagate_marginals",
    "run_nsga2",
    "sample_trajectories",
    "save_instance",
    "save_schedule",
    "skewness_of",
    "triangular_cdf",
    "variance_of",
]
