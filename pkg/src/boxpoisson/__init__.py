"""Adaptive FMM box-code Poisson solver for Dirichlet problems on multiply connected
planar domains: u = v + u^H with v the volume potential of an extended right-hand side
and u^H a layer-potential correction evaluated by QBX."""
from .errors import BoxPoissonError
from .examples import BUILTINS, default_geometry
from .extension import ExtensionMode
from .geometry import FourierCurve, Orientation, build_geometry
from .quadtree import RefinementRule, Weighting
from .solver import CorrectionVersion, PoissonProblem, PoissonSolution, error_report, eval_solution, solve

__all__ = [
    "BUILTINS", "BoxPoissonError", "CorrectionVersion", "ExtensionMode", "FourierCurve", "Orientation",
    "PoissonProblem", "PoissonSolution", "RefinementRule", "Weighting", "build_geometry", "error_report",
    "eval_solution", "default_geometry", "solve",
]
__version__ = "0.1.0"
