"""feaskit: convex feasibility via dynamic string averaging projections.

A library and CLI for solving find-a-point-in-the-intersection problems
with string averaging projection methods, running them exactly, under
summable perturbations, or superiorized, and numerically auditing the
strong quasi-nonexpansiveness inequalities, linear-rate constants, error
bands and subspace-angle rate predictions that govern their convergence.
"""

from .engine import (
    LimitEstimate,
    LinearObjective,
    PerturbationSchedule,
    QuadraticObjective,
    RestartAnalysis,
    RunConfig,
    SteeringSpec,
    Trace,
    WeightedL1Objective,
    estimate_limit,
    fejer_monitor,
    restart_analysis,
    run,
    strong_rate_check,
    superiorization_report,
    weak_rate_check,
)
from .exceptions import (
    DimensionMismatchError,
    EngineError,
    FeaskitError,
    InfeasibleWitnessError,
    InvalidSetError,
    NonFiniteInputError,
    OracleConvergenceError,
    OracleError,
    ProblemFileError,
    ScheduleValidationError,
)
from .intersection import (
    distance_intersection,
    distance_intersection_many,
    project_intersection,
    project_intersection_many,
)
from .io import parse_problem, read_trace_csv, serialize_problem_file, write_trace_csv
from .oracles import (
    GridSpec,
    finite_difference_subgradient_check,
    grid_project,
    two_subspace_exact_limit,
)
from .problem import Problem
from .regularity import (
    AngleReport,
    RateConstants,
    RegularityEstimate,
    cos_kappa_bounds,
    error_band_check,
    estimate_kappa,
    friedrichs_cosine,
    perturbed_residual_band_check,
    rate_constants,
    rate_from_angle,
)
from .sets import (
    AffineSubspace,
    Ball,
    Box,
    ConvexSet,
    HalfSpace,
    Hyperplane,
    LinearSubspace,
    contains,
    distance,
    project,
    project_enlarged,
)
from .strings import (
    ControlSchedule,
    SqneCertificate,
    StringPlan,
    apply_operator,
    apply_string,
    composition_telescope_check,
    cyclic_schedule,
    cyclic_single_index_schedule,
    fixed_schedule,
    partial_bound_check,
    single_string_plan,
    sqne_certificate,
    validate_schedule,
)

__version__ = "0.1.0"
