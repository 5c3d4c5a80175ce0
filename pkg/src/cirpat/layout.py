"""Developing radii into circles, and diagnostics on the resulting picture."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import CircleOutsideCarrier, ConfigurationInfeasible, HolonomyViolation
from .geometry import (EUCLIDEAN, HYPERBOLIC, Circle, disk_automorphism,
                       edge_length, face_angles, hyperbolic_to_euclidean_circle, map_circle)
from .triangulation import AngleFunction, DiskTriangulation, Loop, edge_key

HOLONOMY_TOL = 1e-7
TANGENCY_TOL = 1e-9


# --- pattern type ---------------------------------------------------------------

@dataclass
class LaidOutPattern:
    """Circles keyed by vertex.

    ``circles`` are Euclidean circles in the plane (hyperbolic patterns live in
    the unit disk and carry hyperbolic radii in ``Circle.rho``). ``points`` are
    the geometric centres: hyperbolic centres, or tangency points for
    horocycles (listed in ``ideal``).
    """

    T: DiskTriangulation
    geometry: str
    circles: Dict[int, Circle]
    points: Dict[int, complex]
    root: int
    ideal: frozenset = frozenset()
    tree: List[Tuple[int, Tuple[int, int, int]]] = field(default_factory=list)
    realized: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Euclidean centres and radii aligned with ``T.vertices``."""
        verts = self.T.vertices if self.T is not None else sorted(self.circles)
        c = np.array([self.circles[v].center for v in verts], complex)
        r = np.array([self.circles[v].radius for v in verts], float)
        return c, r

    def transformed(self, a: complex, b: complex = 0) -> "LaidOutPattern":
        """Image under the similarity z -> a z + b, as a Euclidean pattern."""
        circles = {v: C.scaled(a, b) for v, C in self.circles.items()}
        points = {v: circles[v].center for v in circles}
        return LaidOutPattern(self.T, EUCLIDEAN, circles, points, self.root, frozenset(), list(self.tree),
                              dict(self.realized))

    def to_json(self) -> dict:
        return {
            "geometry": self.geometry,
            "root": self.root,
            "faces": [list(f) for f in self.T.faces] if self.T is not None else [],
            "circles": {str(v): {"center": [C.center.real, C.center.imag], "radius": C.radius,
                                 **({"rho": C.rho} if C.rho is not None else {}),
                                 **({"horocycle": True} if v in self.ideal else {})}
                        for v, C in self.circles.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "LaidOutPattern":
        """Inverse of ``to_json``; the triangulation is rebuilt when faces are present."""
        from .triangulation import build_triangulation

        circles, ideal = {}, set()
        for key, c in data.get("circles", {}).items():
            v = int(key)
            circles[v] = Circle(complex(*c["center"]), float(c["radius"]),
                                data.get("geometry", EUCLIDEAN), c.get("rho"))
            if c.get("horocycle"):
                ideal.add(v)
        T = build_triangulation(sorted(circles), data["faces"]) if data.get("faces") else None
        root = int(data.get("root", min(circles, default=0)))
        return cls(T, data.get("geometry", EUCLIDEAN), circles, {v: C.center for v, C in circles.items()},
                   root, frozenset(ideal))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# --- development ----------------------------------------------------------------

def _radius_map(T, r):
    if hasattr(r, "as_dict"):
        return r.as_dict()
    if isinstance(r, dict):
        return dict(r)
    return {v: float(x) for v, x in zip(T.vertices, r)}


def _corner_angles(radii, thetas, geometry):
    ang, bad = face_angles(np.array([radii], float), np.array([thetas], float), geometry)
    if bad[0]:
        raise ConfigurationInfeasible(f"radii {radii} admit no triangle", witness=tuple(radii))
    return ang[0]


def develop(T: DiskTriangulation, theta: AngleFunction, r, geometry: Optional[str] = None,
            root: Optional[int] = None, check: bool = True) -> LaidOutPattern:
    """Glue the face triangles together starting from ``root``.

    The root centre goes to the origin and its first ring neighbour onto the
    positive real axis. Every edge not used by the placement tree is then
    re-measured; a mismatch above 1e-7 means the curvature was not flat.
    """
    if geometry is None:
        geometry = getattr(r, "geometry", EUCLIDEAN)
    radii = _radius_map(T, r)
    ideal = frozenset(v for v, x in radii.items() if math.isinf(x))
    if ideal and geometry != HYPERBOLIC:
        raise ValueError("infinite radii only make sense for horocycles")
    if root is None:
        root = next((v for v in T.interior if v not in ideal), None)
        if root is None:
            root = next(v for v in T.vertices if v not in ideal)
    if root in ideal:
        raise ValueError("the root must carry a finite circle")
    pos: Dict[int, complex] = {root: 0j}
    first = T.ring(root)[0]
    if first in ideal:
        pos[first] = 1 + 0j
    elif geometry == EUCLIDEAN:
        pos[first] = complex(edge_length(radii[root], radii[first], theta(root, first)), 0)
    else:
        pos[first] = complex(math.tanh(edge_length(radii[root], radii[first], theta(root, first), HYPERBOLIC) / 2), 0)
    tree: List[Tuple[int, Tuple[int, int, int]]] = [(root, ()), (first, (root, first))]

    faces_of: Dict[int, List[Tuple[int, int, int]]] = {v: [] for v in T.vertices}
    for f in T.faces:
        for v in f:
            faces_of[v].append(f)
    queue = deque(faces_of[root] + faces_of[first])
    deferred: List[Tuple[int, int, int]] = []
    circles: Dict[int, Circle] = {}

    def place(face) -> bool:
        unknown = [v for v in face if v not in pos]
        if len(unknown) != 1:
            return True
        s = unknown[0]
        k = face.index(s)
        p, q = face[(k + 1) % 3], face[(k + 2) % 3]     # face is (p, q, s) cyclically
        rad = (radii[p], radii[q], radii[s])
        th = (theta(q, s), theta(s, p), theta(p, q))
        ang = _corner_angles(rad, th, geometry)
        if geometry == EUCLIDEAN:
            l_ps = float(edge_length(radii[p], radii[s], theta(p, s)))
            d = pos[q] - pos[p]
            pos[s] = pos[p] + l_ps * (d / abs(d)) * complex(math.cos(ang[0]), math.sin(ang[0]))
        elif p not in ideal or q not in ideal:
            if p not in ideal:
                base, other, turn = p, q, ang[0]
            else:
                base, other, turn = q, p, -ang[1]
            phi = disk_automorphism(pos[base])
            w = complex(phi(pos[other]))
            direction = (w / abs(w)) * complex(math.cos(turn), math.sin(turn))
            if s in ideal:
                s_local = direction
            else:
                l = float(edge_length(radii[base], radii[s], theta(base, s), HYPERBOLIC))
                s_local = math.tanh(l / 2) * direction
            back = disk_automorphism(-pos[base])
            z = complex(back(s_local))
            pos[s] = z / abs(z) if s in ideal else z
        else:
            return False
        tree.append((s, face))
        for f in faces_of[s]:
            queue.append(f)
        return True

    while queue or deferred:
        while queue:
            f = queue.popleft()
            if not place(f):
                deferred.append(f)
        progressed = False
        for f in deferred:
            if sum(v not in pos for v in f) == 1:
                _place_between_horocycles(f, pos, radii, theta, ideal, circles, tree, T)
                for g in faces_of[tree[-1][0]]:
                    queue.append(g)
                progressed = True
                break
        deferred = [f for f in deferred if any(v not in pos for v in f)]
        if not progressed and not queue:
            break
    if len(pos) != len(T.vertices):
        raise ConfigurationInfeasible("development did not reach every vertex")

    # circles
    for v in T.vertices:
        if v in circles:
            continue
        if geometry == EUCLIDEAN:
            circles[v] = Circle(pos[v], radii[v], EUCLIDEAN)
        elif v not in ideal:
            circles[v] = hyperbolic_to_euclidean_circle(pos[v], radii[v])
    for v in ideal:
        if v in circles:
            continue
        f = next((w for w in T.ring(v) if w not in ideal), None)
        if f is None:
            raise ConfigurationInfeasible(f"horocycle {v} has no finite neighbour", witness=v)
        circles[v] = _horocycle_from_neighbor(pos[f], radii[f], pos[v], theta(v, f))

    P = LaidOutPattern(T, geometry, circles, dict(pos), root, ideal, tree)
    P.realized = {e: _realized_angle(circles[e[0]], circles[e[1]]) for e in T.edges}
    if check:
        _holonomy_check(P, radii, theta)
    return P


def _horocycle_from_neighbor(center: complex, rho: float, zeta: complex, th: float) -> Circle:
    phi = disk_automorphism(center)
    z = complex(phi(zeta))
    z /= abs(z)
    rf = math.tanh(rho / 2)
    R = (1 - rf * rf) / (2 * (1 + rf * math.cos(th)))
    local = Circle((1 - R) * z, R, HYPERBOLIC, math.inf)
    C = map_circle(disk_automorphism(-center), local)
    return Circle(C.center, C.radius, HYPERBOLIC, math.inf)


_LORENTZ = np.array([[0, -0.5, 0, 0], [-0.5, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


def _lorentz(C: Circle) -> np.ndarray:
    k = 1.0 / C.radius
    return np.array([k, (abs(C.center) ** 2 - C.radius ** 2) * k, C.center.real * k, C.center.imag * k])


def _place_between_horocycles(face, pos, radii, theta, ideal, circles, tree, T):
    # Both known vertices are horocycles: the third circle is cut out by three
    # linear conditions in inversive coordinates plus the unit normalisation.
    s = next(v for v in face if v not in pos)
    k = face.index(s)
    p, q = face[(k + 1) % 3], face[(k + 2) % 3]
    for v in (p, q):
        if v not in circles:
            f = next((w for w in T.ring(v) if w not in ideal and w in pos), None)
            if f is None:
                raise ConfigurationInfeasible("cannot place a face spanned by two bare horocycles", witness=face)
            circles[v] = _horocycle_from_neighbor(pos[f], radii[f], pos[v], theta(v, f))
    g = 1.0 if s in ideal else 1.0 / math.tanh(radii[s])
    unit = np.array([1.0, -1.0, 0.0, 0.0])
    A = np.vstack([_LORENTZ @ _lorentz(circles[p]), _LORENTZ @ _lorentz(circles[q]), _LORENTZ @ unit])
    b = np.array([-math.cos(theta(p, s)), -math.cos(theta(q, s)), g])
    v0 = np.linalg.lstsq(A, b, rcond=None)[0]
    n = np.linalg.svd(A)[2][-1]
    a2, a1, a0 = n @ _LORENTZ @ n, 2 * (v0 @ _LORENTZ @ n), v0 @ _LORENTZ @ v0 - 1
    disc = a1 * a1 - 4 * a2 * a0
    if disc < 0 or abs(a2) < 1e-15:
        raise ConfigurationInfeasible("no circle meets both horocycles at the prescribed angles", witness=face)
    zp, zq = pos[p], pos[q]
    # left side of the geodesic p -> q contains the boundary arc from q to p
    mid_arg = math.atan2(zq.imag, zq.real) + ((math.atan2(zp.imag, zp.real) - math.atan2(zq.imag, zq.real)) % (2 * math.pi)) / 2
    ref = complex(math.cos(mid_arg), math.sin(mid_arg))
    best = None
    for t in ((-a1 + math.sqrt(disc)) / (2 * a2), (-a1 - math.sqrt(disc)) / (2 * a2)):
        v = v0 + t * n
        if v[0] <= 0:
            continue
        C = Circle(complex(v[2], v[3]) / v[0], 1.0 / v[0], HYPERBOLIC, math.inf if s in ideal else radii[s])
        pt = C.center / abs(C.center) if s in ideal else _hyperbolic_center(C)
        if _same_side(zp, zq, pt, ref):
            best = (C, pt)
    if best is None:
        raise ConfigurationInfeasible("no correctly oriented circle between the horocycles", witness=face)
    circles[s], pos[s] = best
    tree.append((s, face))


def _hyperbolic_center(C: Circle) -> complex:
    d = abs(C.center)
    if d == 0:
        return 0j
    a, b = d - C.radius, d + C.radius
    s = math.atanh(a) + math.atanh(b)
    return (C.center / d) * math.tanh(s / 2)


def _same_side(zp, zq, pt, ref) -> bool:
    # side of the geodesic joining two boundary points
    cross = (zq - zp).real * (-(zp + zq)).imag - (zq - zp).imag * (-(zp + zq)).real
    if abs(zp + zq) < 1e-12 or abs(cross) < 1e-15:
        def side(z):
            return np.sign(((zq - zp).conjugate() * (z - zp)).imag)
        return side(pt) == side(ref)
    half = abs(math.atan2((zq / zp).imag, (zq / zp).real)) / 2
    cg = (zp + zq) / abs(zp + zq) / math.cos(half)
    rg = math.tan(half)

    def side(z):
        return np.sign(abs(z - cg) - rg)
    return side(pt) == side(ref)


def _realized_cos(c1: Circle, c2: Circle) -> float:
    d = abs(c1.center - c2.center)
    return (d * d - c1.radius ** 2 - c2.radius ** 2) / (2 * c1.radius * c2.radius)


def _realized_angle(c1: Circle, c2: Circle) -> float:
    # half-angle form: exact zero for touching circles instead of arccos(1 - eps)
    d = abs(c1.center - c2.center)
    r1, r2 = c1.radius, c2.radius
    one_minus = (r1 + r2 - d) * (r1 + r2 + d)
    one_plus = (d - r1 + r2) * (d + r1 - r2)
    band = 1e-9 * 2 * r1 * r2
    if one_minus < -band or one_plus < -band:
        return math.nan
    return 2 * math.atan2(math.sqrt(max(one_minus, 0.0)), math.sqrt(max(one_plus, 0.0)))


def _hyperbolic_distance(z1: complex, z2: complex) -> float:
    return 2 * math.atanh(min(abs(z1 - z2) / abs(1 - z1.conjugate() * z2), 1.0))


def _holonomy_check(P: LaidOutPattern, radii, theta):
    worst, witness = 0.0, None
    for (i, j) in P.T.edges:
        if P.geometry == EUCLIDEAN:
            l = float(edge_length(radii[i], radii[j], theta(i, j)))
            err = abs(abs(P.points[i] - P.points[j]) - l) / max(1.0, l)
        elif i in P.ideal or j in P.ideal:
            # compare cosines: the angle itself is ill-conditioned near tangency
            err = abs(_realized_cos(P.circles[i], P.circles[j]) - math.cos(theta(i, j)))
        else:
            l = float(edge_length(radii[i], radii[j], theta(i, j), HYPERBOLIC))
            err = abs(_hyperbolic_distance(P.points[i], P.points[j]) - l) / max(1.0, l)
        if err > worst:
            worst, witness = err, (i, j)
    if worst > HOLONOMY_TOL:
        raise HolonomyViolation(f"edge {witness} closes up with error {worst:.3e}", witness=witness)


# --- regularity ------------------------------------------------------------------

@dataclass
class RegularityReport:
    is_rcp: bool
    extra_contacts: List[Tuple[int, int]]
    reducible_edges: List[Tuple[int, int]]
    extraneous_tangencies: List[Tuple[int, int]]

    def to_json(self) -> dict:
        return {"is_rcp": self.is_rcp, "extra_contacts": [list(p) for p in self.extra_contacts],
                "reducible_edges": [list(p) for p in self.reducible_edges],
                "extraneous_tangencies": [list(p) for p in self.extraneous_tangencies]}


def _contact_pairs(c: np.ndarray, r: np.ndarray, tol: float, chunk: int = 512):
    """All index pairs i < j whose closed disks meet (distance <= r_i + r_j + tol)."""
    n = len(c)
    out = []
    for s in range(0, n, chunk):
        block = c[s:s + chunk, None]
        d = np.abs(block - c[None, :])
        gap = d - (r[s:s + chunk, None] + r[None, :])
        ii, jj = np.nonzero(gap <= tol)
        ii = ii + s
        keep = ii < jj
        out.extend(zip(ii[keep].tolist(), jj[keep].tolist(), gap[ii[keep] - s, jj[keep]].tolist()))
    return out


def _convex_quad(pts: Sequence[complex]) -> bool:
    signs = []
    for k in range(4):
        a, b, c = pts[k], pts[(k + 1) % 4], pts[(k + 2) % 4]
        signs.append(((b - a).conjugate() * (c - b)).imag)
    return all(s > 0 for s in signs) or all(s < 0 for s in signs)


def validate_rcp(P: LaidOutPattern, T: Optional[DiskTriangulation] = None) -> RegularityReport:
    """Compare the realized contact graph with the edges of ``T``."""
    T = T or P.T
    c, r = P.arrays()
    verts = T.vertices
    contacts = set()
    extra, tang = [], []
    for i, j, gap in _contact_pairs(c, r, TANGENCY_TOL):
        e = edge_key(verts[i], verts[j])
        contacts.add(e)
        if not T.is_edge(*e):
            extra.append(e)
            if abs(gap) <= TANGENCY_TOL:
                tang.append(e)
    adj: Dict[int, set] = {}
    for a, b in contacts:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    reducible = set()
    for a, b in extra:
        common = sorted(adj[a] & adj[b])
        for x in common:
            for y in common:
                if x < y and edge_key(x, y) in contacts:
                    quad = [P.circles[a].center, P.circles[x].center, P.circles[b].center, P.circles[y].center]
                    if _convex_quad(quad):
                        reducible.add(edge_key(a, b))
                        reducible.add(edge_key(x, y))
    return RegularityReport(not extra, sorted(extra), sorted(reducible), sorted(tang))


# --- covering --------------------------------------------------------------------

@dataclass
class CoveringReport:
    counts: np.ndarray
    max: int
    exclusive: Dict[int, Optional[complex]] = field(default_factory=dict)

    @property
    def all_indispensable(self) -> bool:
        return all(w is not None for w in self.exclusive.values())


def _cover_counts(c: np.ndarray, r: np.ndarray, pts: np.ndarray, exclude: Optional[int] = None) -> np.ndarray:
    tree = cKDTree(np.column_stack([c.real, c.imag]))
    xy = np.column_stack([pts.real, pts.imag])
    cand = tree.query_ball_point(xy, float(r.max()))
    out = np.zeros(len(pts), int)
    for k, idx in enumerate(cand):
        if idx:
            idx = np.asarray(idx)
            hit = np.abs(pts[k] - c[idx]) <= r[idx]
            if exclude is not None:
                hit &= idx != exclude
            out[k] = int(hit.sum())
    return out


def sample_carrier(P: LaidOutPattern, n: int, rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Points drawn from disks (area-weighted) and face triangles."""
    rng = rng or np.random.default_rng(0)
    c, r = P.arrays()
    F = P.T.face_array()
    tri = c[F]
    tri_area = 0.5 * np.abs(((tri[:, 1] - tri[:, 0]).conjugate() * (tri[:, 2] - tri[:, 0])).imag)
    w = np.concatenate([np.pi * r * r, tri_area])
    pick = rng.choice(len(w), size=n, p=w / w.sum())
    out = np.empty(n, complex)
    disk = pick < len(r)
    k = pick[disk]
    rad = r[k] * np.sqrt(rng.random(len(k)))
    out[disk] = c[k] + rad * np.exp(2j * np.pi * rng.random(len(k)))
    f = pick[~disk] - len(r)
    a, b = rng.random(len(f)), rng.random(len(f))
    flip = a + b > 1
    a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
    out[~disk] = tri[f, 0] + a * (tri[f, 1] - tri[f, 0]) + b * (tri[f, 2] - tri[f, 0])
    return out


def covering_multiplicity(P: LaidOutPattern, sample_points=None, n_samples: int = 100_000,
                          rng: Optional[np.random.Generator] = None,
                          indispensability: bool = True) -> CoveringReport:
    """How many closed disks cover each sample point, plus a point of each disk no other disk covers."""
    c, r = P.arrays()
    pts = sample_carrier(P, n_samples, rng) if sample_points is None else np.asarray(sample_points, complex)
    counts = _cover_counts(c, r, pts)
    exclusive: Dict[int, Optional[complex]] = {}
    if indispensability:
        for k, v in enumerate(P.T.vertices):
            exclusive[v] = _exclusive_point(c, r, k)
    return CoveringReport(counts, int(counts.max()) if len(counts) else 0, exclusive)


def _exclusive_point(c, r, k) -> Optional[complex]:
    # rings just inside the boundary, 10^3 points per unit length (at least 64)
    m = max(64, int(2 * math.pi * r[k] * 1000))
    m = min(m, 20000)
    ang = np.exp(2j * np.pi * (np.arange(m) + 0.5) / m)
    near = np.abs(c - c[k]) <= r + r[k]
    near[k] = False
    cn, rn = c[near], r[near]
    for frac in (0.999, 0.99, 0.95, 0.8, 0.5, 0.0):
        pts = c[k] + frac * r[k] * ang if frac > 0 else np.array([c[k]])
        if len(cn) == 0:
            return complex(pts[0])
        covered = (np.abs(pts[:, None] - cn[None, :]) <= rn[None, :]).any(axis=1)
        free = np.flatnonzero(~covered)
        if len(free):
            return complex(pts[free[0]])
    return None


# --- cross sections ---------------------------------------------------------------

@dataclass
class CrossSection:
    radius: float
    vertices: Tuple[int, ...]          # V_C in order of first appearance along the circle
    loop: Loop
    cells: List[Tuple[int, ...]]       # covering sets met in counter-clockwise order
    perturbations: int = 0


def _arcs(c: np.ndarray, r: np.ndarray, rho: float):
    d = np.abs(c)
    full = d + rho <= r
    meet = (np.abs(d - rho) <= r) & ~full
    arcs = {}
    for k in np.flatnonzero(meet):
        cosw = (rho * rho + d[k] ** 2 - r[k] ** 2) / (2 * rho * d[k])
        w = math.acos(max(-1.0, min(1.0, cosw)))
        mid = math.atan2(c[k].imag, c[k].real)
        arcs[int(k)] = (mid - w, mid + w)
    return arcs, np.flatnonzero(full)


def _in_triangle(z, a, b, c) -> bool:
    def s(p, q):
        return ((q - p).conjugate() * (z - p)).imag
    x, y, w = s(a, b), s(b, c), s(c, a)
    return (x >= 0 and y >= 0 and w >= 0) or (x <= 0 and y <= 0 and w <= 0)


def cross_section_loop(P: LaidOutPattern, T: Optional[DiskTriangulation] = None,
                       radius: float = 1.0, max_perturb: int = 40) -> CrossSection:
    """Walk the circle |z| = radius and record which disks it passes through.

    The vertices whose disks meet the circle are returned together with a
    simple loop of T inside them that winds once around the origin.
    """
    T = T or P.T
    c, r = P.arrays()
    verts = T.vertices
    rho = float(radius)
    for attempt in range(max_perturb + 1):
        arcs, full = _arcs(c, r, rho)
        events = []
        for k, (a, b) in arcs.items():
            events.append((a % (2 * math.pi), k))
            events.append((b % (2 * math.pi), k))
        ang = sorted(e[0] for e in events)
        degenerate = any(b - a < 1e-12 for a, b in zip(ang, ang[1:]))
        degenerate |= any(b - a < 1e-12 for a, b in arcs.values())
        if not degenerate:
            break
        # a nudge opens a gap of its own size, or of its square when the circle
        # passes a tangency point on a ray tangent to both disks; so keep doubling
        rho = float(radius) + 1e-12 * 2 ** attempt
    else:
        raise CircleOutsideCarrier("could not find a generic radius near the requested one")

    if not arcs:
        if len(full) == 1:
            v = verts[int(full[0])]
            return CrossSection(rho, (v,), Loop((v,), False), [(v,)], attempt)
        raise CircleOutsideCarrier(f"circle of radius {radius} meets no disk")

    cuts = sorted({e[0] for e in events})
    cells: List[Tuple[int, ...]] = []
    F = T.faces
    for a, b in zip(cuts, cuts[1:] + [cuts[0] + 2 * math.pi]):
        t = 0.5 * (a + b)
        z = rho * complex(math.cos(t), math.sin(t))
        inside = tuple(sorted(verts[k] for k in np.flatnonzero(np.abs(z - c) <= r)))
        if not inside:
            if not any(_in_triangle(z, *(P.circles[v].center for v in f)) for f in F):
                raise CircleOutsideCarrier(f"circle of radius {radius} leaves the carrier near {z}",
                                           witness=(z.real, z.imag))
        if not cells or cells[-1] != inside:
            cells.append(inside)
    if len(cells) > 1 and cells[0] == cells[-1]:
        cells.pop()

    order: List[int] = []
    for s in cells:
        for v in s:
            if v not in order:
                order.append(v)
    # each disk meets the circle in one arc: its vertex occupies one contiguous run
    for v in order:
        runs = [v in s for s in cells]
        if sum(1 for k in range(len(runs)) if runs[k] and not runs[k - 1]) > 1:
            raise CircleOutsideCarrier(f"circle of radius {radius} re-enters disk {v}", witness=v)

    walk = _entry_walk(cells, T, set(order))
    loop = _simple_winding_loop(walk, P)
    return CrossSection(rho, tuple(order), loop, cells, attempt)


def _entry_walk(cells, T, allowed) -> List[int]:
    walk: List[int] = []
    prev: Tuple[int, ...] = cells[-1]
    for s in cells:
        for v in s:
            if v in prev:
                continue
            if not walk:
                walk.append(v)
            elif v != walk[-1]:
                if not T.is_edge(walk[-1], v):
                    walk.extend(_bridge(T, walk[-1], v, allowed, s)[1:-1])
                walk.append(v)
        prev = s
    if len(walk) > 1 and walk[0] != walk[-1] and not T.is_edge(walk[-1], walk[0]):
        walk.extend(_bridge(T, walk[-1], walk[0], allowed, cells[0])[1:-1])
    return walk


def _bridge(T, a, b, allowed, current) -> List[int]:
    for k in current:
        if T.is_edge(a, k) and T.is_edge(k, b):
            return [a, k, b]
    prev = {a: None}
    q = deque([a])
    while q:
        x = q.popleft()
        if x == b:
            break
        for y in T.neighbors(x):
            if y in allowed and y not in prev:
                prev[y] = x
                q.append(y)
    if b not in prev:
        raise CircleOutsideCarrier(f"no path between {a} and {b} among the crossed disks", witness=(a, b))
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def _winding(walk: Sequence[int], P: LaidOutPattern) -> int:
    pts = [P.circles[v].center for v in walk]
    total = 0.0
    for a, b in zip(pts, pts[1:] + pts[:1]):
        if a == 0 or b == 0:
            return 0
        total += math.atan2((b / a).imag, (b / a).real)
    return int(round(total / (2 * math.pi)))


def _simple_winding_loop(walk: List[int], P: LaidOutPattern) -> Loop:
    cycle = list(walk)
    while True:
        seen = {}
        split = None
        for k, v in enumerate(cycle):
            if v in seen:
                split = (seen[v], k)
                break
            seen[v] = k
        if split is None:
            break
        a, b = split
        inner = cycle[a:b]
        outer = cycle[:a] + cycle[b:]
        cycle = inner if _winding(inner, P) != 0 else outer
    return Loop(tuple(cycle), P.T.is_face(cycle) if len(cycle) == 3 else False)


# --- distortion and counting ------------------------------------------------------

@dataclass
class DistortionReport:
    tau: Dict[int, float]
    containing_origin: List[int]
    by_ring: Dict[int, float]       # k -> max tau over circles beyond ring k


def distortion(P: LaidOutPattern, origin: complex = 0j, root: Optional[int] = None) -> DistortionReport:
    """tau(C) = radius / distance from the origin to the disk."""
    tau, containing = {}, []
    for v, C in P.circles.items():
        d = abs(C.center - origin) - C.radius
        if d <= 0:
            containing.append(v)
        else:
            tau[v] = C.radius / d
    root = P.root if root is None else root
    dist = P.T.distances(root)
    by_ring = {}
    for k in range(max(dist.values()) + 1):
        vals = [t for v, t in tau.items() if dist[v] > k]
        if vals:
            by_ring[k] = max(vals)
    return DistortionReport(tau, sorted(containing), by_ring)


def circle_count(P: LaidOutPattern, rho: float, k: float, origin: complex = 0j) -> int:
    """Number of disks of radius >= k * rho meeting the disk D(origin, rho)."""
    c, r = P.arrays()
    return int(np.count_nonzero((r >= k * rho) & (np.abs(c - origin) - r <= rho)))


# --- carrier -----------------------------------------------------------------------

class CarrierKind(Enum):
    PLANE_LIKE = "PlaneLike"
    DISK_LIKE = "DiskLike"
    INDETERMINATE = "Indeterminate"


@dataclass
class CarrierInfo:
    areas: List[float]
    outlines: List[np.ndarray]
    outer_radii: List[float]          # per level, in units of the root radius
    kind: CarrierKind


def carrier_outline(P: LaidOutPattern, per_circle: int = 256) -> np.ndarray:
    """Outer boundary samples of the union of disks and triangles, sorted by angle."""
    c, r = P.arrays()
    F = P.T.face_array()
    idx = [P.T.index[v] for v in sorted(P.T.boundary)] or range(len(c))
    ang = np.exp(2j * np.pi * np.arange(per_circle) / per_circle)
    tri = c[F]
    mid = tri.mean(axis=1)
    reach = np.abs(tri - mid[:, None]).max(axis=1)
    pts = []
    for k in idx:
        z = c[k] + r[k] * ang * (1 + 1e-9)
        cov = np.zeros(len(z), bool)
        near = np.flatnonzero(np.abs(c - c[k]) <= r + r[k] + 1e-12)
        for j in near:
            if j != k:
                cov |= np.abs(z - c[j]) <= r[j]
        z = z[~cov]
        # only triangles that can reach this circle
        local = tri[np.abs(mid - c[k]) <= reach + r[k] * (1 + 1e-6)]
        if len(z) and len(local):
            z = z[~_in_any_triangle(z, local)]
        pts.append(z)
    pts = np.concatenate(pts) if pts else np.zeros(0, complex)
    centre = P.circles[P.root].center
    order = np.argsort(np.angle(pts - centre))
    return pts[order]


def _in_any_triangle(pts: np.ndarray, tri: np.ndarray) -> np.ndarray:
    a, b, d = tri[:, 0][None], tri[:, 1][None], tri[:, 2][None]
    z = pts[:, None]

    def s(p, q):
        return ((q - p).conjugate() * (z - p)).imag
    x, y, w = s(a, b), s(b, d), s(d, a)
    return (((x >= 0) & (y >= 0) & (w >= 0)) | ((x <= 0) & (y <= 0) & (w <= 0))).any(axis=1)


def _polygon_area(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    x, y = pts.real, pts.imag
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def carrier_info(patterns: Sequence[LaidOutPattern], depth: int = 3) -> CarrierInfo:
    """Outline per level and a PlaneLike / DiskLike hint from how the outer radius grows.

    Radii are measured from the root centre in units of the root radius, so the
    hint does not depend on how each level was normalised.
    """
    if isinstance(patterns, LaidOutPattern):
        patterns = [patterns]
    areas, outlines, radii = [], [], []
    for P in patterns:
        out = carrier_outline(P)
        root = P.circles[P.root]
        outlines.append(out)
        areas.append(_polygon_area(out) / root.radius ** 2)
        radii.append(float(np.max(np.abs(out - root.center))) / root.radius if len(out) else math.nan)
    kind = CarrierKind.INDETERMINATE
    if len(radii) >= max(3, depth):
        inc = np.diff(radii)
        if np.all(inc > 0):
            if inc[-1] >= 0.5 * inc[0]:
                kind = CarrierKind.PLANE_LIKE
            elif inc[-1] < 0.5 * inc[-2] and inc[-1] < 0.05 * radii[-1]:
                kind = CarrierKind.DISK_LIKE
    return CarrierInfo(areas, outlines, radii, kind)


# --- rendering ------------------------------------------------------------------------

def to_svg(P: LaidOutPattern, loops: Iterable[Loop] = (), outline: Optional[np.ndarray] = None,
           size: int = 800) -> str:
    """Static SVG: one circle element per vertex (sorted by id), optional loop and carrier overlays.

    Coordinates are written with 9 decimals so that identical input gives
    byte-identical output.
    """
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
            f'viewBox="0 0 {size} {size}">')
    if not P.circles:
        return head + "\n</svg>"
    c, r = P.arrays()
    if P.geometry == HYPERBOLIC:
        lo, hi = -1.05, 1.05
        ylo, yhi = lo, hi
    else:
        lo, hi = float((c.real - r).min()), float((c.real + r).max())
        ylo, yhi = float((c.imag - r).min()), float((c.imag + r).max())
    span = max(hi - lo, yhi - ylo) or 1.0
    s = size / span

    def X(z):
        return f"{(z.real - lo) * s:.9f}"

    def Y(z):
        return f"{(yhi - z.imag) * s:.9f}"

    parts = [head]
    if P.geometry == HYPERBOLIC:
        parts.append(f'<circle cx="{X(0j)}" cy="{Y(0j)}" r="{s:.9f}" fill="none" stroke="#888"/>')
    for v in sorted(P.circles):
        C = P.circles[v]
        parts.append(f'<circle id="v{v}" cx="{X(C.center)}" cy="{Y(C.center)}" '
                     f'r="{C.radius * s:.9f}" fill="none" stroke="black" stroke-width="0.5"/>')
    for L in loops:
        pts = " ".join(f"{X(P.circles[v].center)},{Y(P.circles[v].center)}" for v in L.vertices)
        parts.append(f'<polygon points="{pts}" fill="none" stroke="green" stroke-width="1.5"/>')
    if outline is not None and len(outline):
        pts = " ".join(f"{X(z)},{Y(z)}" for z in outline)
        parts.append(f'<polygon class="carrier" points="{pts}" fill="none" stroke="red" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts)
