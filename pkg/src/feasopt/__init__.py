"""Feasible-iterate sequential quadratic programming.

Every iterate produced by :func:`solve` satisfies the nonlinear equality,
inequality and bound constraints to a user tolerance.
"""

from .bench import BenchProblem
from .deriv import DerivativeOracle
from .direction import Direction, dembo_tolerance, gradient_direction, newton_direction, projected_cg
from .errors import (
    CoordinateRetractFailed,
    DegenerateBox,
    FeasoptError,
    IndefiniteProjection,
    InfeasibleBounds,
    InfeasibleStart,
    LinAlgFailure,
    LineSearchFailed,
    NonFiniteDerivative,
    RetractionDiverged,
)
from .factor import factor_equality, factor_mixed, multipliers, project_tangent
from .linesearch import LineSearchConfig, armijo, golden
from .problem import AugmentedPoint, ProblemSpec, TransformedProblem, eval_h, init_augmented, transform
from .retract import (
    RetractionConfig,
    RetractionResult,
    h_retract,
    projection_retract,
    projection_retract_mixed,
    qn_retract_equality,
    qn_retract_mixed,
)
from .solver import SolveOptions, SolveResult, TraceRecord, solve

__version__ = "0.1.0"
