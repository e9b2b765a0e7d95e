"""Fast approximate l1 regression via Lewis-weight preconditioning and stochastic descent."""

from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateInputError,
    DimensionError,
    InstanceTooLargeError,
    L1Error,
    NotNearIsotropicError,
    ParseError,
    RankDeficiencyError,
)
from .instances import GenSpec, ProblemInstance, generate
from .oracle import exact_l1_small, exact_l2, weighted_median
from .preconditioner import PreconditionConfig, PreconditionedProblem, precondition
from .solvers import SolveConfig, SolveReport, solve_l1
from .weights import leverage_scores, lewis_weights

__version__ = "1.0.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DegenerateInputError",
    "DimensionError",
    "GenSpec",
    "InstanceTooLargeError",
    "L1Error",
    "NotNearIsotropicError",
    "ParseError",
    "PreconditionConfig",
    "PreconditionedProblem",
    "ProblemInstance",
    "RankDeficiencyError",
    "SolveConfig",
    "SolveReport",
    "exact_l1_small",
    "exact_l2",
    "generate",
    "leverage_scores",
    "lewis_weights",
    "precondition",
    "solve_l1",
    "weighted_median",
]
