from .bvp import (
    ROLE_BOUNDARY,
    ROLE_INITIAL,
    ROLE_PDE,
    ROLE_PERIODIC,
    BvpSpec,
    CollocationSet,
    ErrorReport,
    FaceCondition,
    NonlinearTerms,
    PeriodicCondition,
    build_collocation,
    evaluate_errors,
    field_state,
    operator_vector,
    uniform_grid,
)
from .catalog import catalog, get_problem, problem_names
from .march import BlockMarchConfig, MarchResult, block_march, handoff, split_time

__all__ = [
    "ROLE_BOUNDARY", "ROLE_INITIAL", "ROLE_PDE", "ROLE_PERIODIC",
    "BvpSpec", "CollocationSet", "ErrorReport", "FaceCondition", "NonlinearTerms",
    "PeriodicCondition", "build_collocation", "evaluate_errors", "field_state",
    "operator_vector", "uniform_grid", "catalog", "get_problem", "problem_names",
    "BlockMarchConfig", "MarchResult", "block_march", "handoff", "split_time",
]
