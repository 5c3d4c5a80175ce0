"""Circle patterns with obtuse intersection angles on disk triangulations."""

from .errors import CirpatError, NoConvergence
from .geometry import EUCLIDEAN, HYPERBOLIC, Circle
from .triangulation import AngleFunction, DiskTriangulation, build_triangulation, combinatorial_ball

__version__ = "0.1.0"

__all__ = ["AngleFunction", "Circle", "CirpatError", "DiskTriangulation", "EUCLIDEAN", "HYPERBOLIC",
           "NoConvergence", "build_triangulation", "combinatorial_ball", "__version__"]
