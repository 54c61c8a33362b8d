"""Sustainability-aware placement of digital-twin components on edge servers."""

from .baselines import (
    BaselineResult,
    baseline_nearest,
    baseline_random_best,
    baseline_restart_hillclimb,
)
from .costs import (
    CostBreakdown,
    FeatureVector,
    Placement,
    communication_cost,
    evaluate,
    features,
    offloading_cost,
    placement_from_triples,
    placement_to_triples,
)
from .domain import (
    DtComponent,
    EdgeServer,
    GenConfig,
    Instance,
    PhysicalDevice,
    Point,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    manhattan,
    validate_instance,
)
from .errors import ConfigurationError, NoFeasibleState, SizeCapExceeded
from .harness import (
    ExperimentConfig,
    ExperimentData,
    MetricsRow,
    RunRecord,
    run_experiment,
    run_experiment_full,
    validate_p1_feasibility,
    write_outputs,
)
from .oracle import OracleResult, exact_solve
from .saa import (
    OverloadProfile,
    SaaParams,
    SampleSet,
    allowed_overloads,
    approx_success_prob,
    draw_samples,
    is_feasible,
    overload_excess,
    overload_profile,
    server_load,
)
from .search import (
    SearchState,
    SearchStats,
    Trajectory,
    hill_climb,
    make_state,
    neighbors,
    random_feasible_state,
)
from .stage import (
    QuadraticModel,
    StageConfig,
    StageResult,
    converged,
    fit_value_model,
    predict,
    stage_search,
)

__all__ = [
    "BaselineResult",
    "ConfigurationError",
    "CostBreakdown",
    "DtComponent",
    "EdgeServer",
    "ExperimentConfig",
    "ExperimentData",
    "FeatureVector",
    "GenConfig",
    "Instance",
    "MetricsRow",
    "NoFeasibleState",
    "OracleResult",
    "OverloadProfile",
    "PhysicalDevice",
    "Placement",
    "Point",
    "QuadraticModel",
    "RunRecord",
    "SaaParams",
    "SampleSet",
    "SearchState",
    "SearchStats",
    "SizeCapExceeded",
    "StageConfig",
    "StageResult",
    "Trajectory",
    "allowed_overloads",
    "approx_success_prob",
    "baseline_nearest",
    "baseline_random_best",
    "baseline_restart_hillclimb",
    "communication_cost",
    "converged",
    "draw_samples",
    "evaluate",
    "exact_solve",
    "features",
    "fit_value_model",
    "generate_instance",
    "hill_climb",
    "instance_from_dict",
    "instance_to_dict",
    "is_feasible",
    "make_state",
    "manhattan",
    "neighbors",
    "offloading_cost",
    "overload_excess",
    "overload_profile",
    "placement_from_triples",
    "placement_to_triples",
    "predict",
    "random_feasible_state",
    "run_experiment",
    "run_experiment_full",
    "server_load",
    "stage_search",
    "validate_instance",
    "validate_p1_feasibility",
    "write_outputs",
]
