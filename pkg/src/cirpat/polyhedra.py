"""Circle patterns as hyperbolic polyhedra and back.

Every circle C bounds a half-space of upper half-space: the convex hull of the
ideal points outside its disk. Inverse stereographic projection carries the
circle to the sphere at infinity of the Klein ball, where that half-space is
the flat side {x : n.x <= h} of the plane spanned by the image circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.spatial import cKDTree

from .errors import (ConditionViolated, ConfigurationInfeasible, DegenerateChain, NotRCP,
                     UnboundedFace)
from .geometry import (EUCLIDEAN, Circle, IntersectionKind, _require_layout_condition,
                       radical_center)
from .layout import LaidOutPattern, RegularityReport, _realized_angle, validate_rcp
from .triangulation import (ANGLE_TOL, AngleFunction, DiskTriangulation, Loop, build_triangulation,
                            check_conditions, edge_key, z2_violations, z3_violations)

Face = Tuple[int, int, int]
IDEAL_TOL = 1e-12
GAUSS_BONNET_TOL = 1e-6


# --- half-spaces -------------------------------------------------------------------

def lift(z: complex) -> np.ndarray:
    """Inverse stereographic projection from the north pole onto the unit sphere."""
    s = abs(z) ** 2
    return np.array([2 * z.real, 2 * z.imag, s - 1]) / (s + 1)


def minkowski(x: np.ndarray, y: np.ndarray) -> float:
    return float(x[0] * y[0] + x[1] * y[1] + x[2] * y[2] - x[3] * y[3])


@dataclass(frozen=True)
class HalfSpace:
    """Half-space of hyperbolic 3-space whose ideal boundary is the outside of ``circle``."""

    circle: Circle

    def __post_init__(self):
        c = self.circle.center
        if not (math.isfinite(c.real) and math.isfinite(c.imag) and math.isfinite(self.circle.radius)):
            raise ValueError(f"degenerate boundary circle {self.circle}")

    def _raw(self):
        c, r = self.circle.center, self.circle.radius
        q = abs(c) ** 2 - r * r
        return np.array([2 * c.real, 2 * c.imag, q - 1]), 1 + q, r

    def klein_plane(self) -> Tuple[np.ndarray, float]:
        """Unit normal n and offset h; the half-space is n.x <= h."""
        a, b, _ = self._raw()
        norm = float(np.linalg.norm(a))
        return a / norm, b / norm

    def de_sitter(self) -> np.ndarray:
        """Unit spacelike vector of the plane; -<p, p'> is the cosine of the dihedral angle."""
        a, b, r = self._raw()
        return np.append(a, b) / (2 * r)

    def contains(self, x, tol: float = 1e-12) -> bool:
        n, h = self.klein_plane()
        return bool(np.dot(n, x) <= h + tol)


def dihedral_cos(a: HalfSpace, b: HalfSpace) -> float:
    return -minkowski(a.de_sitter(), b.de_sitter())


# --- vertex classes ------------------------------------------------------------------

class VertexKind(Enum):
    COMPACT = "compact"
    IDEAL = "ideal"
    HYPERIDEAL = "hyperideal"


# angle-sum trichotomy seen from the circles and from the polyhedron
KIND_OF_INTERSECTION = {
    IntersectionKind.INTERSTICE: VertexKind.HYPERIDEAL,
    IntersectionKind.COMMON_POINT: VertexKind.IDEAL,
    IntersectionKind.OVERLAP: VertexKind.COMPACT,
}


@dataclass
class VertexClass:
    kinds: Dict[Face, VertexKind]

    def __getitem__(self, face) -> VertexKind:
        return self.kinds[_face_key(face)]

    def count(self, kind: VertexKind) -> int:
        return sum(k is kind for k in self.kinds.values())

    def to_json(self) -> Dict[str, str]:
        return {"-".join(map(str, f)): k.value for f, k in sorted(self.kinds.items())}


def _face_key(face) -> Face:
    return tuple(sorted(face))


def vertex_kind(angles: Sequence[float]) -> VertexKind:
    _require_layout_condition(angles)
    s = float(sum(angles))
    if abs(s - math.pi) <= IDEAL_TOL:
        return VertexKind.IDEAL
    return VertexKind.COMPACT if s > math.pi else VertexKind.HYPERIDEAL


def classify_face_vertices(T: DiskTriangulation, theta: AngleFunction) -> VertexClass:
    """Compact, ideal or hyperideal vertex for each face, by its angle sum against pi."""
    kinds = {}
    for a, b, c in T.faces:
        try:
            kinds[_face_key((a, b, c))] = vertex_kind((theta(b, c), theta(c, a), theta(a, b)))
        except ConfigurationInfeasible as exc:
            raise ConfigurationInfeasible(str(exc), witness=_face_key((a, b, c))) from None
    return VertexClass(kinds)


# --- polyhedron ------------------------------------------------------------------------

class EndClass(Enum):
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"
    OTHER = "Other"


@dataclass
class Polyhedron:
    """Intersection of one half-space per vertex of ``T``; dual edges are the edges of ``T``."""

    T: DiskTriangulation
    halfspaces: Dict[int, HalfSpace]
    theta: AngleFunction
    dihedral: Dict[Tuple[int, int], float]
    vertex_classes: VertexClass
    end_class: Optional[EndClass] = None
    source: Optional[LaidOutPattern] = None

    @property
    def dual_edges(self) -> Tuple[Tuple[int, int], ...]:
        return self.T.edges

    def planes(self) -> Dict[int, Tuple[np.ndarray, float]]:
        return {v: H.klein_plane() for v, H in self.halfspaces.items()}

    def to_json(self) -> dict:
        faces = {}
        for v, H in sorted(self.halfspaces.items()):
            C = H.circle
            faces[str(v)] = {"center": [C.center.real, C.center.imag], "radius": C.radius}
        return {
            "faces": faces,
            "triangles": [list(f) for f in self.T.faces],
            "dual_edges": [list(e) for e in self.T.edges],
            "theta": self.theta.to_json(),
            "dihedral_angles": {f"{i}-{j}": a for (i, j), a in sorted(self.dihedral.items())},
            "vertex_classes": self.vertex_classes.to_json(),
            "end_class": self.end_class.value if self.end_class else None,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Polyhedron":
        T = build_triangulation(sorted(int(v) for v in data["faces"]), data["triangles"])
        hs = {int(v): HalfSpace(Circle(complex(*f["center"]), float(f["radius"])))
              for v, f in data["faces"].items()}
        theta = AngleFunction.from_json(data["theta"])
        end = data.get("end_class")
        return _assemble(T, hs, theta, None, EndClass(end) if end else None)


def _assemble(T, hs, theta, source, end_class=None) -> Polyhedron:
    dihedral = {e: _realized_angle(hs[e[0]].circle, hs[e[1]].circle) for e in T.edges}
    return Polyhedron(T, hs, theta, dihedral, classify_face_vertices(T, theta), end_class, source)


def _theta_of(P: LaidOutPattern, theta: Optional[AngleFunction]) -> AngleFunction:
    if theta is not None:
        return theta
    return AngleFunction({e: float(np.clip(a, 0.0, math.pi)) for e, a in P.realized.items()})


def _solve_planes(rows: Sequence[Tuple[np.ndarray, float]]) -> np.ndarray:
    A = np.array([n for n, _ in rows])
    b = np.array([h for _, h in rows])
    return np.linalg.solve(A, b)


def rcp_to_polyhedron(P: LaidOutPattern, theta: Optional[AngleFunction] = None,
                      z2_depth: int = 8, tol: float = 1e-7) -> Polyhedron:
    """Polyhedron of a regular pattern whose angle data passes Z1 and Z2.

    ``theta`` defaults to the angles realized by the circles. Besides the
    regularity and condition checks, every dihedral angle is compared with
    ``theta`` in cosine (tolerance ``tol``) and every pair of adjacent
    finite or ideal vertices is checked to be distinct, i.e. no four boundary
    planes pass through one point.
    """
    T = P.T
    theta = _theta_of(P, theta)
    report = validate_rcp(P)
    if not report.is_rcp:
        raise NotRCP(f"extra contacts {report.extra_contacts[:5]}", witness=report.extra_contacts)
    cond = check_conditions(T, theta, z2_depth)
    for c in ("Z1", "Z2"):
        if not cond.status[c]:
            raise ConditionViolated(f"condition {c} fails", witness=(c, cond.witnesses[c][0]))
    hs = {v: HalfSpace(P.circles[v]) for v in T.vertices}
    for i, j in T.edges:
        err = abs(dihedral_cos(hs[i], hs[j]) - math.cos(theta(i, j)))
        if err > tol:
            raise ConditionViolated(f"dihedral angle on {(i, j)} misses theta by {err:.2e} in cosine",
                                    witness=("dihedral", (i, j)))
    poly = _assemble(T, hs, theta, P)
    _check_trivalent(poly)
    return poly


def _finite_vertices(poly: Polyhedron) -> Dict[Face, np.ndarray]:
    planes = poly.planes()
    out = {}
    for f in poly.T.faces:
        if poly.vertex_classes[f] is not VertexKind.HYPERIDEAL:
            out[_face_key(f)] = _solve_planes([planes[v] for v in f])
    return out


def _check_trivalent(poly: Polyhedron, tol: float = 1e-9) -> None:
    verts = _finite_vertices(poly)
    T = poly.T
    for e, fs in T.edge_faces.items():
        if len(fs) != 2:
            continue
        f, g = (_face_key(T.faces[k]) for k in fs)
        if f in verts and g in verts and np.linalg.norm(verts[f] - verts[g]) <= tol:
            raise NotRCP(f"faces {f} and {g} meet in one point: four planes share a vertex",
                         witness=(f, g))


# --- back to circles -------------------------------------------------------------------------

@dataclass
class PatternRecovery:
    pattern: LaidOutPattern
    verdict: RegularityReport
    z3_holds: bool

    @property
    def consistent(self) -> bool:
        """False only if Z3 holds and yet the circles are not a regular pattern."""
        return self.verdict.is_rcp or not self.z3_holds


def polyhedron_to_pattern(poly: Polyhedron) -> PatternRecovery:
    """Boundary circles of the faces, with the regularity verdict."""
    circles = {v: H.circle for v, H in poly.halfspaces.items()}
    src = poly.source
    if src is not None:
        P = LaidOutPattern(poly.T, src.geometry, circles, dict(src.points), src.root, src.ideal,
                           list(src.tree), dict(src.realized))
    else:
        root = poly.T.interior[0] if poly.T.interior else poly.T.vertices[0]
        P = LaidOutPattern(poly.T, EUCLIDEAN, circles, {v: C.center for v, C in circles.items()}, root)
        P.realized = dict(poly.dihedral)
    verdict = validate_rcp(P)
    return PatternRecovery(P, verdict, not z3_violations(poly.T, poly.theta))


# --- dual conditions ---------------------------------------------------------------------------

RIVIN = "rivin-ideal"
BAO_BONAHON = "baobonahon-hyperideal"
Z_CONDITIONS = "z-conditions"
MODES = (RIVIN, BAO_BONAHON, Z_CONDITIONS)


@dataclass
class DualConditionReport:
    mode: str
    status: Dict[str, bool]
    violations: Dict[str, List[tuple]]
    checked: Dict[str, int]
    max_len: int

    @property
    def passed(self) -> bool:
        return all(self.status.values())

    def to_json(self) -> dict:
        return {"mode": self.mode, "passed": self.passed,
                "status": {k: ("pass" if v else "fail") for k, v in self.status.items()},
                "violations": {k: [list(w) for w in v] for k, v in self.violations.items()},
                "checked": self.checked, "max_len": self.max_len}


def _simple_paths(T: DiskTriangulation, a: int, b: int, max_len: int) -> Iterable[Tuple[int, ...]]:
    path, seen = [a], {a}

    def extend(v):
        for w in sorted(T.neighbors(v)):
            if w == b:
                if len(path) >= 2:
                    yield tuple(path) + (b,)
                continue
            if w in seen or len(path) >= max_len:
                continue
            path.append(w)
            seen.add(w)
            yield from extend(w)
            path.pop()
            seen.discard(w)

    yield from extend(a)


def check_dual_conditions(T: DiskTriangulation, theta: AngleFunction, mode: str = RIVIN,
                          max_len: int = 6) -> DualConditionReport:
    """Evaluate the dihedral-angle conditions of ideal or hyperideal polyhedra on the dual.

    The dual polyhedron has the combinatorics of ``T``: its faces are the
    triangles and its edges carry ``theta``. Loops and paths are enumerated up
    to ``max_len`` edges; strict inequalities treat equality as a violation.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == Z_CONDITIONS:
        rep = check_conditions(T, theta, max_len)
        return DualConditionReport(mode, dict(rep.status), {k: list(v) for k, v in rep.witnesses.items()},
                                   {}, rep.z2_search_depth)
    status, viol, checked = {}, {}, {}
    faces = []
    for f in sorted(_face_key(f) for f in T.faces):
        a, b, c = f
        s = theta(a, b) + theta(b, c) + theta(c, a)
        if mode == RIVIN:
            bad = abs(s - math.pi) > ANGLE_TOL
        else:
            bad = s > math.pi + ANGLE_TOL
        if bad:
            faces.append((*f, s))
    status["faces"], viol["faces"], checked["faces"] = not faces, faces, len(T.faces)
    loops = z2_violations(T, theta, max(max_len, 3))
    loops = [(*c, sum(theta(c[k], c[(k + 1) % len(c)]) for k in range(len(c)))) for c in loops]
    status["loops"], viol["loops"] = not loops, loops
    if mode == BAO_BONAHON:
        paths, n = [], 0
        for a, b in T.edges:
            for p in _simple_paths(T, a, b, max_len):
                # a path inside the boundary of a face containing a and b is exempt
                if len(p) == 3 and T.is_face(p):
                    continue
                n += 1
                s = sum(theta(p[k], p[k + 1]) for k in range(len(p) - 1))
                if s >= (len(p) - 2) * math.pi - ANGLE_TOL:
                    paths.append((*p, s))
        status["paths"], viol["paths"], checked["paths"] = not paths, paths, n
    return DualConditionReport(mode, status, viol, checked, max_len)


# --- Gauss-Bonnet on disk chains -----------------------------------------------------------------

@dataclass
class GaussBonnetCheck:
    loop: Tuple[int, ...]
    curvature_integrals: List[float]     # integral of geodesic curvature along each arc
    angles: List[float]                  # intersection angle at each corner
    total: float                         # sum of integrals + sum of (pi - angle)
    residual: float                      # |total - 2 pi|
    angle_sum: float
    bound: float                         # (n - 2) pi

    @property
    def passed(self) -> bool:
        return self.residual <= GAUSS_BONNET_TOL and self.angle_sum < self.bound


def _inner_corner(ci: Circle, cj: Circle) -> complex:
    """Intersection point of two circles on the left of the directed centre segment."""
    d = cj.center - ci.center
    L = abs(d)
    a = (ci.radius ** 2 - cj.radius ** 2 + L * L) / (2 * L)
    h2 = ci.radius ** 2 - a * a
    if h2 < -1e-12 * ci.radius ** 2:
        raise DegenerateChain("consecutive disks do not meet", witness=(ci, cj))
    u = d / L
    return ci.center + a * u + 1j * math.sqrt(max(h2, 0.0)) * u


def _curvature_integral(C: Circle, start: complex, end: complex, nodes: int = 16) -> float:
    # arc traversed clockwise about the centre (the complementary region lies outside the disk)
    a0 = math.atan2((start - C.center).imag, (start - C.center).real)
    a1 = math.atan2((end - C.center).imag, (end - C.center).real)
    sweep = (a0 - a1) % (2 * math.pi)
    x, w = leggauss(nodes)
    t = a0 - sweep * (x + 1) / 2
    r = C.radius
    # gamma(t) = c + r e^{i t}, run backwards; signed curvature of the clockwise circle
    dx, dy = r * np.sin(t), -r * np.cos(t)
    ddx, ddy = -r * np.cos(t), -r * np.sin(t)
    speed = np.hypot(dx, dy)
    k = (dx * ddy - dy * ddx) / speed ** 3
    return float(np.sum(w * k * speed) * sweep / 2)


def gauss_bonnet_loop_check(P: LaidOutPattern, loop) -> GaussBonnetCheck:
    """Gauss-Bonnet on the bounded region cut out by the chain of disks along ``loop``.

    The region is bounded by concave arcs of the chain circles meeting at the
    inner intersection points, so the integrated curvature plus the turning
    angles pi - theta at the corners must equal 2 pi.
    """
    vs = tuple(loop.vertices if isinstance(loop, Loop) else loop)
    n = len(vs)
    if n < 3 or len(set(vs)) != n:
        raise ValueError("loop must be a simple cycle of at least three vertices")
    for k in range(n):
        if not P.T.is_edge(vs[k], vs[(k + 1) % n]):
            raise ValueError(f"{(vs[k], vs[(k + 1) % n])} is not an edge")
    z = [P.circles[v].center for v in vs]
    area = sum((z[k].conjugate() * z[(k + 1) % n]).imag for k in range(n))
    if area < 0:
        vs = vs[::-1]
    C = [P.circles[v] for v in vs]
    for a in range(n):
        for b in range(a + 2, n):
            if a == 0 and b == n - 1:
                continue
            if abs(C[a].center - C[b].center) < C[a].radius + C[b].radius:
                raise DegenerateChain(f"non-consecutive disks {vs[a]} and {vs[b]} overlap",
                                      witness=(vs[a], vs[b]))
    corners = [_inner_corner(C[k], C[(k + 1) % n]) for k in range(n)]
    integrals = []
    for k in range(n):
        start, end = corners[k - 1], corners[k]
        for other in (C[k - 1], C[(k + 1) % n]):
            p = end if other is C[k - 1] else start
            if abs(p - other.center) < other.radius * (1 - 1e-12):
                raise DegenerateChain(f"arc of circle {vs[k]} is swallowed by its neighbours",
                                      witness=vs[k])
        I = _curvature_integral(C[k], start, end)
        if abs(I) <= 1e-12:
            raise DegenerateChain(f"arc of circle {vs[k]} vanishes", witness=vs[k])
        integrals.append(I)
    angles = [_realized_angle(C[k], C[(k + 1) % n]) for k in range(n)]
    total = sum(integrals) + sum(math.pi - a for a in angles)
    return GaussBonnetCheck(vs, integrals, angles, total, abs(total - 2 * math.pi), sum(angles),
                            (n - 2) * math.pi)


# --- ends ---------------------------------------------------------------------------------------

@dataclass
class EndReport:
    verdict: EndClass
    outer_radii: List[float]            # per level, root-gauge units
    inverted_spread: List[float]        # max |1/z| over outer samples, per level
    fit_residual: Optional[float]       # relative circle-fit residual at the deepest level
    samples: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, complex))


def _patterns(levels) -> List[LaidOutPattern]:
    levels = getattr(levels, "levels", levels)
    if isinstance(levels, LaidOutPattern):
        return [levels]
    return [getattr(L, "pattern", L) for L in levels]


def outer_samples(P: LaidOutPattern) -> np.ndarray:
    """Farthest point of every boundary circle from the root, in units of the root radius."""
    root = P.circles[P.root]
    out = []
    for v in sorted(P.T.boundary):
        C = P.circles[v]
        d = C.center - root.center
        u = d / abs(d) if abs(d) > 0 else 1.0
        out.append((d + C.radius * u) / root.radius)
    return np.array(out, complex)


def mobius_from_triples(z: Sequence[complex], w: Sequence[complex]):
    """Mobius map with z[k] -> w[k] for k = 0, 1, 2."""
    def to_standard(p):
        p1, p2, p3 = p
        # sends p1, p2, p3 to 0, 1, inf
        return np.array([[p2 - p3, -p1 * (p2 - p3)], [p2 - p1, -p3 * (p2 - p1)]], complex)

    M = np.linalg.inv(to_standard(w)) @ to_standard(z)

    def f(x):
        x = np.asarray(x, complex)
        return (M[0, 0] * x + M[0, 1]) / (M[1, 0] * x + M[1, 1])
    return f


def fit_circle(pts: np.ndarray) -> Tuple[complex, float, float]:
    """Least-squares circle; returns centre, radius and max relative residual."""
    A = np.column_stack([pts.real, pts.imag, np.ones(len(pts))])
    b = np.abs(pts) ** 2
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = complex(sol[0] / 2, sol[1] / 2)
    R = math.sqrt(max(sol[2] + abs(c) ** 2, 0.0))
    res = float(np.max(np.abs(np.abs(pts - c) - R))) / R if R > 0 else math.inf
    return c, R, res


def _canonical(pts: np.ndarray) -> np.ndarray:
    # three outermost samples, one per angular third, to 1, w, w^2
    ang = np.angle(pts)
    k0 = int(np.argmax(np.abs(pts)))
    rel = (ang - ang[k0]) % (2 * math.pi)
    picks = [k0]
    for lo in (2 * math.pi / 3, 4 * math.pi / 3):
        sector = np.flatnonzero((rel >= lo - math.pi / 3) & (rel < lo + math.pi / 3))
        if not len(sector):
            return pts
        picks.append(int(sector[np.argmax(np.abs(pts[sector]))]))
    omega = np.exp(2j * math.pi / 3)
    f = mobius_from_triples(pts[picks], [1, omega, omega ** 2])
    return f(pts)


def classify_end(levels, fit_tol: float = 1e-3) -> EndReport:
    """Parabolic, Hyperbolic or Other from the outer boundary of successive levels.

    In root gauge (root circle centred at 0 with radius 1) the outer samples of
    a parabolic exhaustion run off to infinity at a linear rate, so their
    images under 1/z shrink to a point. Otherwise the deepest samples are
    normalised by a Mobius map and fitted by a circle; a relative residual
    below ``fit_tol`` means the accumulation set is a circle.
    """
    pats = _patterns(levels)
    samples = [outer_samples(P) for P in pats]
    radii = [float(np.max(np.abs(s))) if len(s) else math.nan for s in samples]
    spread = [float(np.max(1 / np.abs(s))) if len(s) else math.nan for s in samples]
    last = samples[-1] if samples else np.zeros(0, complex)
    if len(radii) < 3:
        return EndReport(EndClass.OTHER, radii, spread, None, last)
    inc = np.diff(radii)
    if np.all(inc > 0) and inc[-1] >= 0.5 * inc[0]:
        return EndReport(EndClass.PARABOLIC, radii, spread, None, last)
    bounded = abs(inc[-1]) < 0.5 * abs(inc[-2]) and abs(inc[-1]) < 0.05 * radii[-1]
    _, _, res = fit_circle(_canonical(last))
    verdict = EndClass.HYPERBOLIC if bounded and res < fit_tol else EndClass.OTHER
    return EndReport(verdict, radii, spread, res, last)


# --- mesh export -------------------------------------------------------------------------------

KLEIN = "klein"
UPPER = "upper"


@dataclass
class Mesh:
    vertices: np.ndarray                 # (V, 3) in the requested model
    klein: np.ndarray                    # the same vertices in Klein coordinates
    faces: List[Tuple[int, ...]]         # outward oriented polygons
    labels: List[tuple]                  # ("face", v) | ("truncation", face) | ("horoball", face)
    model: str
    unbounded: List[int]                 # vertices of T whose face was clipped at the horizon
    dihedral_angles: Dict[Tuple[int, int], float]

    def edges(self) -> Dict[Tuple[int, int], List[Tuple[int, int]]]:
        """Undirected edge -> list of (face index, +1/-1 direction)."""
        out: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
        for fi, f in enumerate(self.faces):
            for k in range(len(f)):
                a, b = f[k], f[(k + 1) % len(f)]
                out.setdefault(edge_key(a, b), []).append((fi, 1 if a < b else -1))
        return out

    def is_oriented_surface(self) -> bool:
        for uses in self.edges().values():
            if len(uses) > 2 or (len(uses) == 2 and uses[0][1] == uses[1][1]):
                return False
        return True

    def to_obj(self) -> str:
        lines = [f"v {x:.9f} {y:.9f} {z:.9f}" for x, y, z in np.round(self.vertices, 9) + 0.0]
        lines += ["f " + " ".join(str(i + 1) for i in f) for f in self.faces]
        return "\n".join(lines) + "\n"

    def to_ply(self) -> str:
        head = ["ply", "format ascii 1.0", f"element vertex {len(self.vertices)}",
                "property double x", "property double y", "property double z",
                f"element face {len(self.faces)}", "property list uchar int vertex_indices",
                "end_header"]
        body = [f"{x:.9f} {y:.9f} {z:.9f}" for x, y, z in np.round(self.vertices, 9) + 0.0]
        body += [f"{len(f)} " + " ".join(map(str, f)) for f in self.faces]
        return "\n".join(head + body) + "\n"


def klein_to_upper(x: np.ndarray) -> np.ndarray:
    """Klein ball -> upper half-space, matching the stereographic boundary identification."""
    x = np.atleast_2d(x)
    s = np.sum(x * x, axis=1, keepdims=True)
    p = x / (1 + np.sqrt(np.clip(1 - s, 0, None)))
    N = np.array([0.0, 0.0, 1.0])
    d = p - N
    F = N + 2 * d / np.sum(d * d, axis=1, keepdims=True)
    F[:, 2] = -F[:, 2]
    return F


class _Points:
    def __init__(self):
        self.xyz: List[np.ndarray] = []
        self.key: Dict[tuple, int] = {}

    def add(self, key, x) -> int:
        if key not in self.key:
            self.key[key] = len(self.xyz)
            self.xyz.append(np.asarray(x, float))
        return self.key[key]


def _exit_point(planes, i, j, k, horizon) -> np.ndarray:
    """Where the edge line of planes i, j leaves the ball of radius ``horizon``, heading into H_k."""
    (ni, hi), (nj, hj), (nk, _) = planes[i], planes[j], planes[k]
    A = np.array([ni, nj])
    x0 = np.linalg.lstsq(A, np.array([hi, hj]), rcond=None)[0]
    d = np.cross(ni, nj)
    d /= np.linalg.norm(d)
    if np.dot(nk, d) > 0:
        d = -d
    b = float(np.dot(x0, d))
    disc = b * b - (float(np.dot(x0, x0)) - horizon ** 2)
    return x0 + (-b + math.sqrt(max(disc, 0.0))) * d


def _arc(n, h, A, B, horizon, feasible, step=math.pi / 48) -> List[np.ndarray]:
    centre = h * n
    rho = math.sqrt(max(horizon ** 2 - h * h, 0.0))
    e1 = A - centre
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    b = B - centre
    tb = math.atan2(float(np.dot(b, e2)), float(np.dot(b, e1))) % (2 * math.pi)
    # the free arc stays outside every neighbouring disk; the other way round may
    # also pass through interstice gaps, so judge by the worst sample, not the midpoint
    best = None
    for sweep in (tb, tb - 2 * math.pi):
        m = max(2, math.ceil(abs(sweep) / step))
        arc = [centre + rho * (math.cos(sweep * t / m) * e1 + math.sin(sweep * t / m) * e2) for t in range(1, m)]
        slack = min(feasible(x) for x in arc)
        if best is None or slack > best[0]:
            best = (slack, arc)
    return best[1]


def _newell(pts: np.ndarray) -> np.ndarray:
    nx = np.roll(pts, -1, axis=0)
    return np.array([np.sum((pts[:, 1] - nx[:, 1]) * (pts[:, 2] + nx[:, 2])),
                     np.sum((pts[:, 2] - nx[:, 2]) * (pts[:, 0] + nx[:, 0])),
                     np.sum((pts[:, 0] - nx[:, 0]) * (pts[:, 1] + nx[:, 1]))])


def _plane_fit(pts: np.ndarray, outward: np.ndarray) -> Tuple[np.ndarray, float]:
    m = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - m)
    n = vt[-1]
    if np.dot(n, outward) < 0:
        n = -n
    return n, float(np.dot(n, m))


def _plane_cos(a: Tuple[np.ndarray, float], b: Tuple[np.ndarray, float]) -> float:
    (n1, h1), (n2, h2) = a, b
    return -(float(np.dot(n1, n2)) - h1 * h2) / math.sqrt((1 - h1 * h1) * (1 - h2 * h2))


def export_mesh(poly: Polyhedron, model: str = KLEIN, truncate: bool = True, horizon: float = 1.0,
                strict: bool = False, horoball_scale: float = 0.01) -> Mesh:
    """Surface of the (truncated) polyhedron as polygons.

    Hyperideal vertices are cut off by the plane over the circle orthogonal to
    the three face circles; ideal vertices by a plane orthogonal to the ideal
    direction, sized so that the cut has diameter ``horoball_scale`` times the
    shortest incident edge. Faces of boundary vertices of ``T`` reach the
    sphere at infinity and are clipped on the sphere of radius ``horizon``;
    they are listed in ``unbounded`` (or raise UnboundedFace with ``strict``).
    """
    if model not in (KLEIN, UPPER):
        raise ValueError(f"model must be '{KLEIN}' or '{UPPER}'")
    if not 0 < horizon <= 1:
        raise ValueError("horizon must lie in (0, 1]")
    T = poly.T
    planes = poly.planes()
    kinds = poly.vertex_classes
    pts = _Points()
    corners: Dict[Face, Dict[Tuple[int, int], int]] = {}
    extra_faces: List[Tuple[tuple, List[int], np.ndarray]] = []

    verts = {}
    for f in T.faces:
        key = _face_key(f)
        kind = kinds[f]
        if kind is not VertexKind.HYPERIDEAL:
            verts[key] = _solve_planes([planes[v] for v in f])
    exits = {}
    for e in T.boundary_edges:
        f = T.faces[T.edge_faces[e][0]]
        k = next(v for v in f if v not in e)
        exits[e] = _exit_point(planes, e[0], e[1], k, horizon)

    for f in T.faces:
        key = _face_key(f)
        a, b, c = f
        fe = [edge_key(a, b), edge_key(b, c), edge_key(c, a)]
        kind = kinds[f]
        if kind is VertexKind.COMPACT or not truncate:
            if key not in verts:
                # untruncated hyperideal vertex, possibly at projective infinity
                try:
                    verts[key] = _solve_planes([planes[v] for v in f])
                except np.linalg.LinAlgError:
                    raise UnboundedFace(f"hyperideal vertex of {key} is at infinity", witness=key) from None
            idx = pts.add(("v", key), verts[key])
            corners[key] = {e: idx for e in fe}
            continue
        if kind is VertexKind.HYPERIDEAL:
            circs = [poly.halfspaces[v].circle for v in f]
            z0 = radical_center(*circs)
            power = abs(z0 - circs[0].center) ** 2 - circs[0].radius ** 2
            cut = HalfSpace(Circle(z0, math.sqrt(max(power, 1e-300)))).klein_plane()
            label = ("truncation", key)
        else:
            u = verts[key] / np.linalg.norm(verts[key])
            steps = {e: _solve_planes([planes[e[0]], planes[e[1]], (u, -1.0)]) - _solve_planes(
                [planes[e[0]], planes[e[1]], (u, 0.0)]) for e in fe}
            scale = math.inf
            for e in fe:
                other = [g for g in T.edge_faces[e] if _face_key(T.faces[g]) != key]
                far = verts.get(_face_key(T.faces[other[0]])) if other else exits.get(e)
                if far is not None:
                    scale = min(scale, float(np.linalg.norm(far - verts[key])))
            diam = max(np.linalg.norm(steps[p] - steps[q]) for p in fe for q in fe)
            s = horoball_scale * (scale if math.isfinite(scale) else 1.0) / diam
            cut = (u, 1.0 - s)
            label = ("horoball", key)
        ids = {e: pts.add(("t", key, e), _solve_planes([planes[e[0]], planes[e[1]], cut])) for e in fe}
        corners[key] = ids
        extra_faces.append((label, [ids[e] for e in fe], cut[0]))

    polys: List[Tuple[tuple, List[int], np.ndarray]] = []
    unbounded = []
    for v in T.vertices:
        ring = T.ring(v)
        closed = v not in T.boundary
        seq: List[int] = []
        m = len(ring) if closed else len(ring) - 1
        if not closed:
            seq.append(pts.add(("x", edge_key(v, ring[0])), exits[edge_key(v, ring[0])]))
        for k in range(m):
            j1, j2 = ring[k], ring[(k + 1) % len(ring)]
            key = _face_key((v, j1, j2))
            seq.append(corners[key][edge_key(v, j1)])
            seq.append(corners[key][edge_key(v, j2)])
        if not closed:
            e_last = edge_key(v, ring[-1])
            seq.append(pts.add(("x", e_last), exits[e_last]))
            n, h = planes[v]

            def slack(x, ring=ring):
                return min(planes[w][1] - float(np.dot(planes[w][0], x)) for w in ring)
            arc = _arc(n, h, pts.xyz[seq[-1]], pts.xyz[seq[0]], horizon, slack)
            seq.extend(pts.add(("a", v, t), x) for t, x in enumerate(arc))
            unbounded.append(v)
        polys.append((("face", v), seq, planes[v][0]))
    if strict and unbounded:
        raise UnboundedFace(f"{len(unbounded)} faces reach the sphere at infinity", witness=unbounded)

    xyz = np.array(pts.xyz)
    # merge coincident points (edges of zero length between tangent circles)
    parent = list(range(len(xyz)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a
    for a, b in sorted(cKDTree(xyz).query_pairs(1e-10)):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    roots = sorted({find(a) for a in range(len(xyz))})
    new = {r: k for k, r in enumerate(roots)}
    remap = [new[find(a)] for a in range(len(xyz))]
    klein = xyz[roots]

    faces, labels = [], []
    for label, seq, outward in polys + extra_faces:
        f = []
        for i in (remap[a] for a in seq):
            if not f or f[-1] != i:
                f.append(i)
        while len(f) > 1 and f[0] == f[-1]:
            f.pop()
        if len(f) < 3:
            continue
        if np.dot(_newell(klein[f]), outward) < 0:
            f.reverse()
        faces.append(tuple(f))
        labels.append(label)

    fitted = {}
    for label, f in zip(labels, faces):
        if label[0] == "face":
            fitted[label[1]] = _plane_fit(klein[list(f)], planes[label[1]][0])
    dihedral = {}
    for i, j in T.edges:
        if i in fitted and j in fitted:
            dihedral[(i, j)] = math.acos(max(-1.0, min(1.0, _plane_cos(fitted[i], fitted[j]))))
    coords = klein if model == KLEIN else klein_to_upper(klein)
    return Mesh(coords, klein, faces, labels, model, sorted(unbounded), dihedral)
