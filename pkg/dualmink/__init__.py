__version__ = "0.1.0"

from .bodies import Ball, Ellipsoid, RadialGrid, StarBody, SupportPolytope
from .checks import CheckStatus, PreconditionReport, evaluate_preconditions
from .errors import DualMinkError
from .measures import DiscreteMeasure, dual_curvature_measure, dual_mixed_volume
from .solver import SolveConfig, SolveReport, SolveStatus, minimize, verify_solution
from .sphere import GridKind, SphereGrid, build_grid, integrate
