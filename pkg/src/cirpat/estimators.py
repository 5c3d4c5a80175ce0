"""Estimator-style wrappers for the two workflows that have hyperparameters and fitted state.

``CirclePatternSolver`` fits radii and a layout to an angled triangulation;
``ConformalTypeClassifier`` fits a type verdict to a triangulation generator.
The combinatorial and geometric primitives stay plain functions.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import AngleOutOfRange, NonPositiveRadius
from .geometry import EUCLIDEAN, GEOMETRIES, HYPERBOLIC
from .triangulation import AngleFunction, DiskTriangulation


# --- validation helpers ---------------------------------------------------------------

def check_triangulation(T) -> DiskTriangulation:
    if not isinstance(T, DiskTriangulation):
        raise TypeError(f"expected a DiskTriangulation, got {type(T).__name__}")
    return T


def check_angles(T: DiskTriangulation, theta) -> AngleFunction:
    """AngleFunction from an AngleFunction, a scalar, or an array aligned with ``T.edges``."""
    if isinstance(theta, AngleFunction):
        theta.validate(T)
        return theta
    if np.isscalar(theta):
        out = AngleFunction.constant(T, float(theta))
    else:
        arr = np.asarray(theta, dtype=float)
        if arr.shape != (len(T.edges),):
            raise AngleOutOfRange(f"expected {len(T.edges)} angles, got shape {arr.shape}")
        out = AngleFunction(dict(zip(T.edges, arr.tolist())))
    out.validate(T)
    return out


def check_boundary(boundary, geometry: str):
    from .solver import HOROCYCLE, BoundaryCondition

    if boundary == HOROCYCLE:
        if geometry != HYPERBOLIC:
            raise ValueError("horocycle boundary requires hyperbolic geometry")
        return BoundaryCondition.horocycle()
    if isinstance(boundary, dict):
        return BoundaryCondition.fixed(boundary)
    value = float(boundary)
    if not value > 0 or not math.isfinite(value):
        raise NonPositiveRadius(f"boundary radius must be positive, got {boundary}")
    return BoundaryCondition.fixed(value)


# --- estimators ------------------------------------------------------------------------

class CirclePatternSolver(BaseEstimator):
    """Solve the flat-curvature problem and lay the pattern out.

    Fitted attributes: ``radii_`` (RadiusAssignment), ``pattern_``
    (LaidOutPattern), ``residual_`` and ``n_iter_``.
    """

    def __init__(self, geometry: str = EUCLIDEAN, boundary=1.0, tol: float = 1e-10,
                 max_iter: int = 100, z2_depth: int = 8, permissive: bool = False):
        self.geometry = geometry
        self.boundary = boundary
        self.tol = tol
        self.max_iter = max_iter
        self.z2_depth = z2_depth
        self.permissive = permissive

    def fit(self, T, theta=0.0, init=None):
        from .layout import develop
        from .solver import SolverConfig, solve_dirichlet

        if self.geometry not in GEOMETRIES:
            raise ValueError(f"geometry must be one of {GEOMETRIES}")
        T = check_triangulation(T)
        theta = check_angles(T, theta)
        bc = check_boundary(self.boundary, self.geometry)
        cfg = SolverConfig(tol=self.tol, max_iter=self.max_iter, z2_depth=self.z2_depth,
                           permissive=self.permissive)
        self.radii_ = solve_dirichlet(T, theta, bc, cfg, self.geometry, init)
        self.theta_ = theta
        self.pattern_ = develop(T, theta, self.radii_)
        self.residual_ = self.radii_.info["residual"]
        self.n_iter_ = self.radii_.info["iterations"]
        return self

    def predict(self, vertices=None) -> np.ndarray:
        """Radii of ``vertices`` (all vertices in ``T`` order by default)."""
        check_is_fitted(self, "radii_")
        if vertices is None:
            return self.radii_.r.copy()
        return np.array([self.radii_[v] for v in vertices])


class ConformalTypeClassifier(BaseEstimator):
    """Parabolic / Hyperbolic verdict from the growth of vertex extremal length."""

    def __init__(self, depth: int = 12, delta: float = 0.05, schedule: str = "log",
                 cauchy_tol: float = 1e-3, window: int = 3, max_vertices: int = 60_000):
        self.depth = depth
        self.delta = delta
        self.schedule = schedule
        self.cauchy_tol = cauchy_tol
        self.window = window
        self.max_vertices = max_vertices

    def fit(self, generator: Callable[[int], DiskTriangulation], v0: int = 0):
        from .network import classify_type

        if not callable(generator):
            raise TypeError("generator must map n to the ball B(v0, n)")
        self.report_ = classify_type(generator, self.depth, v0, self.delta, self.schedule,
                                     self.cauchy_tol, self.window, self.max_vertices)
        self.verdict_ = self.report_.verdict
        self.sequence_ = dict(self.report_.sequence)
        return self

    def predict(self, generator: Optional[Callable] = None) -> str:
        if generator is not None:
            self.fit(generator)
        check_is_fitted(self, "verdict_")
        return self.verdict_
