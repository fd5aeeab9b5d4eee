"""Dual-function radar/communication waveform toolkit.

Designs a projector-structured sensing covariance whose transmit beampattern
matches a multi-target profile, solves the probabilistic communication
constraints through their closed-form deterministic equivalents with damped
surrogate iterations, and verifies every distributional claim by seeded
Monte Carlo.
"""

from ._kernels import BACKEND
from .array_model import (
    AngleGrid,
    DesiredPattern,
    UlaGeometry,
    desired_beampattern,
    matching_error,
    optimal_delta,
    steering_vector,
    transmit_beampattern,
)
from .errors import ConditioningError, DomainError, InfeasibilityError, ShapeError
from .idempotent import (
    CovarianceMatrix,
    ProjectorMatrix,
    construct_projector,
    steering_subspace_seed,
    validate_idempotent,
)
from .problem import ProblemSpec
from .sca import ScaConfig, ScaTrace, sca_iterate, solve_v_feasibility
from .solver import Solution, achievable_rate, choose_rank, compare_baselines, solve

__version__ = "0.1.0"

__all__ = [
    "AngleGrid",
    "BACKEND",
    "ConditioningError",
    "CovarianceMatrix",
    "DesiredPattern",
    "DomainError",
    "InfeasibilityError",
    "ProblemSpec",
    "ProjectorMatrix",
    "ScaConfig",
    "ScaTrace",
    "ShapeError",
    "Solution",
    "UlaGeometry",
    "achievable_rate",
    "choose_rank",
    "compare_baselines",
    "construct_projector",
    "desired_beampattern",
    "matching_error",
    "optimal_delta",
    "sca_iterate",
    "solve",
    "solve_v_feasibility",
    "steering_subspace_seed",
    "steering_vector",
    "transmit_beampattern",
    "validate_idempotent",
    "__version__",
]
