"""Curvature, Newton solves of K = 0, exhaustion and empirical diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (ConditionViolated, ConfigurationInfeasible, HypothesisUnmet,
                     NoConvergence)
from .geometry import EUCLIDEAN, HYPERBOLIC, _check_geometry, face_angles, geodesic_curvature
from .triangulation import (AngleFunction, DiskTriangulation, check_conditions, face_z1_holds)

HOROCYCLE = "horocycle"
TWO_PI = 2 * math.pi


# --- data types -----------------------------------------------------------------

def radius_to_u(r, geometry):
    r = np.asarray(r, float)
    if geometry == EUCLIDEAN:
        return np.log(r)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(r), np.log(np.tanh(np.where(np.isfinite(r), r, 1.0) / 2)), 0.0)


def u_to_radius(u, geometry):
    u = np.asarray(u, float)
    if geometry == EUCLIDEAN:
        return np.exp(u)
    with np.errstate(divide="ignore"):
        return np.where(u < 0, 2 * np.arctanh(np.exp(np.minimum(u, 0.0))), np.inf)


@dataclass
class RadiusAssignment:
    """Radii aligned with ``T.vertices``; hyperbolic horocycles have radius ``inf``."""

    T: DiskTriangulation
    r: np.ndarray
    geometry: str = EUCLIDEAN
    info: dict = field(default_factory=dict)

    @property
    def u(self) -> np.ndarray:
        return radius_to_u(self.r, self.geometry)

    def __getitem__(self, v: int) -> float:
        return float(self.r[self.T.index[v]])

    def as_dict(self) -> Dict[int, float]:
        return {v: float(x) for v, x in zip(self.T.vertices, self.r)}


@dataclass
class CurvatureVector:
    K: Dict[int, float]

    @property
    def array(self) -> np.ndarray:
        return np.array(list(self.K.values()))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.array))) if self.K else 0.0


class BoundaryCondition:
    """Per boundary vertex: a fixed radius or ``HOROCYCLE``."""

    def __init__(self, values: Union[float, str, Mapping[int, Union[float, str]]]):
        self.values = values

    @classmethod
    def fixed(cls, value: Union[float, Mapping[int, float]] = 1.0):
        return cls(value)

    @classmethod
    def horocycle(cls):
        return cls(HOROCYCLE)

    def resolve(self, T: DiskTriangulation, geometry: str) -> Dict[int, float]:
        out = {}
        for v in T.boundary:
            val = self.values.get(v) if isinstance(self.values, Mapping) else self.values
            if val is None:
                raise ValueError(f"no boundary condition for vertex {v}")
            if val == HOROCYCLE:
                if geometry != HYPERBOLIC:
                    raise ValueError("horocycle boundary requires hyperbolic geometry")
                out[v] = math.inf
            else:
                if not float(val) > 0:
                    raise ValueError(f"boundary radius must be positive at {v}")
                out[v] = float(val)
        return out


@dataclass
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 100
    backtrack: float = 0.5
    max_halvings: int = 60
    armijo: float = 1e-4
    max_step: float = 1.0        # cap on |du| per iteration (trust region in u)
    polish: int = 3
    check: bool = True
    permissive: bool = False     # require only Z1 instead of Z2 + Z4
    z2_depth: int = 8
    level: int = 0
    log: Optional[Callable[[dict], None]] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


def json_line_logger(stream):
    """Diagnostics sink writing one JSON object per line."""
    def log(record):
        stream.write(json.dumps(record, sort_keys=True) + "\n")
    return log


# --- assembly -------------------------------------------------------------------

class _System:
    """Face arrays for repeated curvature / Jacobian evaluation."""

    def __init__(self, T: DiskTriangulation, theta: AngleFunction, geometry: str):
        _check_geometry(geometry)
        self.T, self.geometry = T, geometry
        self.F = T.face_array()
        self.TH = theta.face_angles(T)
        n = len(T.vertices)
        self.n = n
        self.interior = np.array([T.index[v] for v in T.interior], dtype=np.intp)
        self.is_interior = np.zeros(n, bool)
        self.is_interior[self.interior] = True
        rows = np.repeat(self.F, 3, axis=1).ravel()
        cols = np.tile(self.F, (1, 3)).ravel()
        self._rows, self._cols = rows, cols

    def angles(self, r):
        return face_angles(r[self.F], self.TH, self.geometry)

    def curvature(self, r):
        ang, bad = self.angles(r)
        K = TWO_PI - np.bincount(self.F.ravel(), weights=ang.ravel(), minlength=self.n)
        return K, bad

    def curvature_and_jacobian(self, r):
        ang, bad, du = face_angles(r[self.F], self.TH, self.geometry, derivative=True)
        K = TWO_PI - np.bincount(self.F.ravel(), weights=ang.ravel(), minlength=self.n)
        J = sp.csr_matrix((-du.ravel(), (self._rows, self._cols)), shape=(self.n, self.n))
        return K, bad, J


def curvature(T: DiskTriangulation, theta: AngleFunction, r, geometry: str = EUCLIDEAN) -> CurvatureVector:
    """K_i = 2 pi minus the angle sum at every interior vertex."""
    r = _radius_array(T, r)
    sysm = _System(T, theta, geometry)
    K, bad = sysm.curvature(r)
    if bad.any():
        f = T.faces[int(np.flatnonzero(bad)[0])]
        raise ConfigurationInfeasible(f"face {f} admits no triangle for these radii", witness=f)
    return CurvatureVector({v: float(K[T.index[v]]) for v in T.interior})


def curvature_jacobian(T: DiskTriangulation, theta: AngleFunction, r, geometry: str = EUCLIDEAN) -> sp.csr_matrix:
    """Full matrix dK_i/du_j over all vertices."""
    r = _radius_array(T, r)
    return _System(T, theta, geometry).curvature_and_jacobian(r)[2]


def _radius_array(T, r):
    if isinstance(r, RadiusAssignment):
        return np.asarray(r.r, float)
    if isinstance(r, Mapping):
        return np.array([r[v] for v in T.vertices], float)
    return np.asarray(r, float)


# --- Newton ------------------------------------------------------------------------

def _require_conditions(T, theta, cfg):
    if not cfg.check:
        return
    if cfg.permissive:
        for f in T.faces:
            a, b, c = f
            if not face_z1_holds(theta(b, c), theta(c, a), theta(a, b)):
                raise ConditionViolated("Z1 fails", witness=("Z1", tuple(sorted(f))))
        return
    rep = check_conditions(T, theta, cfg.z2_depth)
    for cond in ("Z2", "Z4"):
        if not rep.status[cond]:
            raise ConditionViolated(f"{cond} fails", witness=(cond, rep.witnesses[cond][0]))


def solve_dirichlet(T: DiskTriangulation, theta: AngleFunction, bc: BoundaryCondition,
                    cfg: Optional[SolverConfig] = None, geometry: str = EUCLIDEAN,
                    init=None) -> RadiusAssignment:
    """Interior radii with K = 0 given the boundary condition.

    Newton's method in the conformal factors u of the interior vertices; the
    Jacobian is symmetric positive definite, so the Newton direction always
    decreases ||K||^2 and a halving line search suffices.
    """
    cfg = cfg or SolverConfig()
    _check_geometry(geometry)
    theta.validate(T)
    _require_conditions(T, theta, cfg)
    sysm = _System(T, theta, geometry)
    bvals = bc.resolve(T, geometry)
    u = np.empty(sysm.n)
    for v, val in bvals.items():
        u[T.index[v]] = radius_to_u(val, geometry)
    I = sysm.interior
    if init is not None:
        r0 = _radius_array(T, init)
        u[I] = radius_to_u(r0[I], geometry)
    elif geometry == EUCLIDEAN:
        fin = [val for val in bvals.values()]
        u[I] = math.log(float(np.mean(fin))) if fin else 0.0
    else:
        u[I] = math.log(math.tanh(0.5))
    history: List[dict] = []

    def emit(it, res, r):
        rec = {"level": cfg.level, "iter": it, "residual": float(res),
               "min_radius": float(np.min(r)), "max_radius": float(np.max(r))}
        history.append(rec)
        if cfg.log:
            cfg.log(rec)

    r = u_to_radius(u, geometry)
    K, bad, J = sysm.curvature_and_jacobian(r)
    if bad.any():
        f = T.faces[int(np.flatnonzero(bad)[0])]
        raise ConfigurationInfeasible(f"initial radii infeasible on face {f}", witness=f)
    res = float(np.max(np.abs(K[I]))) if len(I) else 0.0
    emit(0, res, r)
    it = 0
    polish_left = cfg.polish
    while len(I):
        if res <= cfg.tol:
            if polish_left <= 0 or res == 0.0:
                break
        if it >= cfg.max_iter:
            best = RadiusAssignment(T, r, geometry, {"iterations": it, "residual": res, "history": history})
            raise NoConvergence(f"residual {res:.3e} after {it} iterations", best=best, diagnostics=history)
        it += 1
        JII = J[I][:, I].tocsc()
        try:
            step = spla.spsolve(JII, -K[I])
        except RuntimeError as exc:  # singular factorisation
            raise NoConvergence(str(exc), diagnostics=history) from exc
        if not np.all(np.isfinite(step)):
            best = RadiusAssignment(T, r, geometry, {"iterations": it, "residual": res, "history": history})
            raise NoConvergence("singular Jacobian", best=best, diagnostics=history)
        big = float(np.max(np.abs(step)))
        if big > cfg.max_step:
            step *= cfg.max_step / big
        merit = float(K[I] @ K[I])
        t = 1.0
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            u_new = u.copy()
            u_new[I] = u[I] + t * step
            if geometry == HYPERBOLIC and np.any(u_new[I] >= 0):
                t *= cfg.backtrack
                continue
            r_new = u_to_radius(u_new, geometry)
            K_new, bad_new = sysm.curvature(r_new)
            if not bad_new.any():
                m_new = float(K_new[I] @ K_new[I])
                if m_new <= (1 - 2 * cfg.armijo * t) * merit:
                    accepted = True
                    break
            t *= cfg.backtrack
        if not accepted:
            if res <= cfg.tol:
                break   # polishing cannot improve further
            bad_faces = np.flatnonzero(bad_new) if bad_new.any() else []
            if len(bad_faces):
                f = T.faces[int(bad_faces[0])]
                raise ConfigurationInfeasible(f"line search failed: face {f} infeasible", witness=f)
            best = RadiusAssignment(T, r, geometry, {"iterations": it, "residual": res, "history": history})
            raise NoConvergence(f"line search stalled at residual {res:.3e}", best=best, diagnostics=history)
        was_converged = res <= cfg.tol
        u = u_new
        r = r_new
        K, bad, J = sysm.curvature_and_jacobian(r)
        new_res = float(np.max(np.abs(K[I])))
        emit(it, new_res, r)
        if was_converged:
            polish_left -= 1
            if new_res > 0.5 * res:
                res = min(res, new_res)
                break
        res = new_res
    return RadiusAssignment(T, r, geometry, {"iterations": it, "residual": res, "history": history})


def normalize(ra: RadiusAssignment, v0: int) -> RadiusAssignment:
    """Scale Euclidean radii so that r_{v0} = 1."""
    if ra.geometry != EUCLIDEAN:
        raise ValueError("only Euclidean radii can be rescaled")
    return RadiusAssignment(ra.T, ra.r / ra[v0], ra.geometry, dict(ra.info))


# --- exhaustion --------------------------------------------------------------------

@dataclass
class ExhaustionLevel:
    n: int
    T: DiskTriangulation
    hyperbolic: RadiusAssignment
    pattern: object                 # layout.LaidOutPattern in the Poincare disk
    radii: RadiusAssignment         # requested geometry (Euclidean ones normalised at v0)
    outer_radius: float             # R = 1 / (Euclidean radius of v0 in the disk)


@dataclass
class ExhaustionReport:
    levels: List[ExhaustionLevel]
    deltas: Dict[int, float]         # level -> max |r^[n] - r^[n-1]| on B(v0, n-2)
    core_deltas: Dict[int, float]    # same on the half-depth ball
    converged: bool
    tol: float
    errors: Dict[int, str] = field(default_factory=dict)


def _theta_for(theta, T):
    if callable(theta) and not isinstance(theta, AngleFunction):
        return theta(T)
    return AngleFunction({e: theta[e] for e in T.edges}, theta.epsilon)


def solve_exhaustion(generator: Callable[[int], DiskTriangulation], theta, v0: int, max_level: int,
                     cfg: Optional[SolverConfig] = None, geometry: str = EUCLIDEAN,
                     min_level: int = 2, tol: float = 1e-6) -> ExhaustionReport:
    """Solve on B(v0, n) for n = min_level..max_level with horocycle boundary.

    Each level is laid out in the Poincare disk with v0 at the origin. For
    ``geometry == "euclidean"`` the reported radii are the Euclidean radii of
    that picture scaled so that r_{v0} = 1; the boundary circles are then
    tangent to the circle of radius R about the origin.
    """
    from .layout import develop

    cfg = cfg or SolverConfig()
    levels: List[ExhaustionLevel] = []
    errors: Dict[int, str] = {}
    for n in range(min_level, max_level + 1):
        T = generator(n)
        th = _theta_for(theta, T)
        lvl_cfg = SolverConfig(**{**cfg.__dict__, "level": n})
        try:
            hyp = solve_dirichlet(T, th, BoundaryCondition.horocycle(), lvl_cfg, HYPERBOLIC)
            P = develop(T, th, hyp, root=v0)
        except Exception as exc:  # level failure halts the driver
            errors[n] = f"{type(exc).__name__}: {exc}"
            break
        r_euc = np.array([P.circles[v].radius for v in T.vertices])
        scale = P.circles[v0].radius
        if geometry == EUCLIDEAN:
            radii = RadiusAssignment(T, r_euc / scale, EUCLIDEAN, {"scale": scale})
        else:
            radii = hyp
        levels.append(ExhaustionLevel(n, T, hyp, P, radii, 1.0 / scale))

    deltas, core = {}, {}
    half = max_level // 2
    for prev, cur in zip(levels, levels[1:]):
        dist = cur.T.distances(v0)
        common = [v for v in prev.T.vertices if dist.get(v, math.inf) <= cur.n - 2]
        if common:
            deltas[cur.n] = max(abs(cur.radii[v] - prev.radii[v]) for v in common)
        inner = [v for v in prev.T.vertices if dist.get(v, math.inf) <= half]
        if inner:
            core[cur.n] = max(abs(cur.radii[v] - prev.radii[v]) for v in inner)
    converged = bool(core) and not errors and core[max(core)] < tol
    return ExhaustionReport(levels, deltas, core, converged, tol, errors)


# --- ring ratio monitor --------------------------------------------------------------

@dataclass
class RingReport:
    min_ratio: Dict[int, Optional[float]]   # level index -> ratio (None when no eligible vertex)
    eligible: Dict[int, int]
    depth: int
    decaying: bool


def ring_monitor(levels: Sequence[RadiusAssignment], eps: float) -> RingReport:
    """min r_j / r_i over neighbours of vertices far (>= ceil(2 pi / eps)) from the boundary."""
    depth = math.ceil(TWO_PI / eps)
    out: Dict[int, Optional[float]] = {}
    counts: Dict[int, int] = {}
    for k, ra in enumerate(levels):
        T = ra.T
        dist = T.distances(T.boundary) if T.boundary else {v: math.inf for v in T.vertices}
        elig = [v for v in T.vertices if dist[v] > depth]
        counts[k] = len(elig)
        if not elig:
            out[k] = None
            continue
        out[k] = min(ra[w] / ra[v] for v in elig for w in T.neighbors(v))
    vals = [x for x in out.values() if x is not None]
    decaying = (len(vals) >= 3 and all(b < a for a, b in zip(vals, vals[1:])) and vals[-1] < 0.5 * vals[0])
    return RingReport(out, counts, depth, decaying)


# --- maximum principles -------------------------------------------------------------

@dataclass
class MaxPrincipleVerdict:
    passed: bool
    geometry: str
    argmax: Optional[int] = None
    argmin: Optional[int] = None
    witness: Optional[int] = None
    detail: dict = field(default_factory=dict)


def verify_max_principle(T: DiskTriangulation, theta: AngleFunction, pattern_a, pattern_b,
                         geometry: str = EUCLIDEAN, tol: float = 1e-9) -> MaxPrincipleVerdict:
    """Check the extremal-ratio (Euclidean) or curvature-comparison (hyperbolic) principle.

    Euclidean inputs are radius assignments; hyperbolic inputs are patterns laid
    out in the Poincare disk (``layout.LaidOutPattern``).
    """
    if geometry == EUCLIDEAN:
        ra, rb = _radius_array(T, pattern_a), _radius_array(T, pattern_b)
        ratio = rb / ra
        hi, lo = float(ratio.max()), float(ratio.min())
        bidx = np.array([T.index[v] for v in sorted(T.boundary)])
        bmax, bmin = float(ratio[bidx].max()), float(ratio[bidx].min())
        scale = max(abs(hi), 1.0)
        ok_max = bmax >= hi - tol * scale
        ok_min = bmin <= lo + tol * scale
        argmax = T.vertices[int(np.argmax(ratio))]
        argmin = T.vertices[int(np.argmin(ratio))]
        witness = None
        if not ok_max:
            witness = argmax
        elif not ok_min:
            witness = argmin
        return MaxPrincipleVerdict(ok_max and ok_min, geometry, argmax, argmin, witness,
                                   {"max": hi, "min": lo, "boundary_max": bmax, "boundary_min": bmin})

    # hyperbolic: pattern_a inside the disk, pattern_b's boundary circles not inside
    ca, cb = pattern_a.circles, pattern_b.circles
    for v in T.vertices:
        c = ca[v]
        if abs(c.center) + c.radius > 1 + 1e-9:
            raise HypothesisUnmet(f"circle {v} of the first pattern leaves the disk", witness=v)
    for v in T.interior:
        c = cb[v]
        if abs(c.center) + c.radius > 1 + 1e-9:
            raise HypothesisUnmet(f"interior circle {v} of the second pattern leaves the disk", witness=v)
    for v in T.boundary:
        c = cb[v]
        if abs(c.center) + c.radius < 1 - 1e-9:
            raise HypothesisUnmet(f"boundary circle {v} of the second pattern lies inside the disk", witness=v)
    ga = {v: geodesic_curvature(ca[v]).g for v in T.vertices}
    gb = {v: geodesic_curvature(cb[v]).g for v in T.vertices}
    bad = [v for v in T.vertices if ga[v] < gb[v] - tol * max(1.0, abs(gb[v]))]
    return MaxPrincipleVerdict(not bad, geometry, witness=bad[0] if bad else None,
                               detail={"g": ga, "g_star": gb})
