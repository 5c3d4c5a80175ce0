"""Reference computations the tests compare the package against.

Nothing here imports the routines it checks; each quantity is recomputed from
coordinates, enumeration or a general-purpose optimizer.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, Hashable, Iterable, List, Sequence, Tuple

import numpy as np

TWO_PI = 2 * math.pi


# --- planar circle geometry -------------------------------------------------------------

def centre_distance(r1: float, r2: float, theta: float) -> float:
    """Distance of two circles meeting at exterior angle theta (law of cosines)."""
    return math.sqrt(r1 * r1 + r2 * r2 + 2 * r1 * r2 * math.cos(theta))


def meeting_angle(c1: complex, r1: float, c2: complex, r2: float) -> float:
    """Exterior angle read off at an actual intersection point of the two circles."""
    d = abs(c2 - c1)
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    p = c1 + (c2 - c1) / d * complex(a, h)
    # the tangents at p are perpendicular to the radii; the exterior angle is
    # the angle between the outward radii, i.e. pi minus the angle they enclose
    u, v = (p - c1) / r1, (p - c2) / r2
    inner = math.acos(max(-1.0, min(1.0, (u.conjugate() * v).real)))
    return math.pi - inner


def quadrilateral(x: float, y: float, z: float, theta: float):
    """Four disks r1 = r3 = x, r2 = y, r4 = z on the triangles 124 and 324.

    Returns (l13, angle13 or None when the disks 1 and 3 miss each other).
    """
    l24 = centre_distance(y, z, theta)
    l12 = centre_distance(x, y, theta)
    l14 = centre_distance(x, z, theta)
    # v2 at the origin, v4 on the positive axis, v1 above and v3 below
    px = (l12 * l12 - l14 * l14 + l24 * l24) / (2 * l24)
    py = math.sqrt(l12 * l12 - px * px)
    v1, v3 = complex(px, py), complex(px, -py)
    l13 = abs(v1 - v3)
    if l13 > 2 * x:
        return l13, None
    return l13, math.acos((l13 * l13 - 2 * x * x) / (2 * x * x))


def admissible(angles: Sequence[float]) -> bool:
    """Three circles with these exterior angles can be laid out for every radius triple."""
    a, b, c = angles
    if not all(0 <= t < math.pi for t in angles):
        return False
    if a + b + c <= math.pi:
        return True
    return a + b < math.pi + c and b + c < math.pi + a and c + a < math.pi + b


def cos_admissible(angles: Sequence[float]) -> bool:
    a, b, c = (math.cos(t) for t in angles)
    return a + b * c >= 0 and b + c * a >= 0 and c + a * b >= 0


def place_triple(radii: Sequence[float], angles: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Euclidean centres for circles i, j, k; angles[a] sits on the edge opposite corner a."""
    ri, rj, rk = radii
    ti, tj, tk = angles
    lij = centre_distance(ri, rj, tk)
    lik = centre_distance(ri, rk, tj)
    ljk = centre_distance(rj, rk, ti)
    x = (lij * lij + lik * lik - ljk * ljk) / (2 * lij)
    y = math.sqrt(max(lik * lik - x * x, 0.0))
    return np.array([0j, complex(lij, 0), complex(x, y)]), np.array(radii, float)


def _pair_points(c1, r1, c2, r2) -> List[complex]:
    d = abs(c2 - c1)
    if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2 * d)
    h = math.sqrt(max(r1 * r1 - a * a, 0.0))
    u = (c2 - c1) / d
    return [c1 + u * complex(a, h), c1 + u * complex(a, -h)]


def disks_share_point(c: Sequence[complex], r: Sequence[float], tol: float = 0.0) -> bool:
    """Exact test for a common point of closed disks.

    The intersection, when nonempty, is a convex region; either it has a corner
    (a crossing of two circles inside every other disk) or it is a whole disk.
    """
    n = len(c)
    slack = tol + 1e-12 * max(r)   # crossing points sit on two circles up to rounding
    inside = lambda p: all(abs(p - c[m]) <= r[m] + slack for m in range(n))
    for i in range(n):
        if all(abs(c[i] - c[m]) + r[i] <= r[m] + slack for m in range(n)):
            return True
    for i, j in itertools.combinations(range(n), 2):
        for p in _pair_points(c[i], r[i] + tol, c[j], r[j] + tol):
            if inside(p):
                return True
    return False


def membership_kind(c, r, eta: float = 1e-10) -> str:
    """'interstice', 'common_point' or 'overlap' by growing and shrinking every disk by eta."""
    scale = max(r)
    grown = disks_share_point(c, [x + eta * scale for x in r])
    shrunk = disks_share_point(c, [x - eta * scale for x in r])
    if shrunk:
        return "overlap"
    return "common_point" if grown else "interstice"


# --- triangle angles ---------------------------------------------------------------------------

def euclidean_corner_angles(radii, angles) -> np.ndarray:
    c, _ = place_triple(radii, angles)
    out = []
    for a in range(3):
        p, q, s = c[a], c[(a + 1) % 3], c[(a + 2) % 3]
        out.append(abs(np.angle((q - p) / (s - p))))
    return np.array(out)


def hyperbolic_corner_angles(radii, angles) -> np.ndarray:
    ri, rj, rk = radii
    ti, tj, tk = angles

    def side(a, b, t):
        return math.acosh(math.cosh(a) * math.cosh(b) + math.sinh(a) * math.sinh(b) * math.cos(t))

    L = [side(rj, rk, ti), side(rk, ri, tj), side(ri, rj, tk)]   # opposite i, j, k
    out = []
    for a in range(3):
        opp, s1, s2 = L[a], L[(a + 1) % 3], L[(a + 2) % 3]
        cosv = (math.cosh(s1) * math.cosh(s2) - math.cosh(opp)) / (math.sinh(s1) * math.sinh(s2))
        out.append(math.acos(max(-1.0, min(1.0, cosv))))
    return np.array(out)


def u_of(r: float, geometry: str) -> float:
    return math.log(r) if geometry == "euclidean" else math.log(math.tanh(r / 2))


def r_of(u: float, geometry: str) -> float:
    return math.exp(u) if geometry == "euclidean" else 2 * math.atanh(math.exp(u))


def fd_jacobian_u(radii, angles, geometry: str, h: float = 1e-6) -> np.ndarray:
    """Central differences of the corner angles in the conformal coordinates."""
    f = euclidean_corner_angles if geometry == "euclidean" else hyperbolic_corner_angles
    u = [u_of(x, geometry) for x in radii]
    J = np.zeros((3, 3))
    for b in range(3):
        up, dn = list(u), list(u)
        up[b] += h
        dn[b] -= h
        fp = f([r_of(x, geometry) for x in up], angles)
        fm = f([r_of(x, geometry) for x in dn], angles)
        J[:, b] = (fp - fm) / (2 * h)
    return J


def spherical_sides(angles) -> np.ndarray:
    """Side lengths of the spherical triangle with the given interior angles (polar law)."""
    A = np.array(angles, float)
    out = []
    for a in range(3):
        b, c = A[(a + 1) % 3], A[(a + 2) % 3]
        cos_side = (math.cos(A[a]) + math.cos(b) * math.cos(c)) / (math.sin(b) * math.sin(c))
        out.append(math.acos(max(-1.0, min(1.0, cos_side))))
    return np.array(out)


# --- vertex extremal length -----------------------------------------------------------------

def minimal_path_sets(adj: Dict[Hashable, Iterable], V1, V2) -> List[frozenset]:
    """Vertex sets of the inclusion-minimal V1-V2 paths.

    These are exactly the induced paths whose interior avoids V1 and V2: a
    chord or an interior terminal gives a path on a strict subset.
    """
    V1, V2 = set(V1), set(V2)
    found = set()

    def walk(path, seen):
        x = path[-1]
        if x in V2:
            found.add(frozenset(path))
            return
        for y in adj[x]:
            if y in seen or y in V1 or any(y in adj[p] for p in path[:-1]):
                continue
            seen.add(y)
            path.append(y)
            walk(path, seen)
            path.pop()
            seen.discard(y)

    for s in V1:
        walk([s], {s})
    return sorted(found, key=lambda f: (len(f), sorted(map(str, f))))


def exhaustive_modulus(adj: Dict[Hashable, Iterable], V1, V2) -> float:
    """min sum m^2 subject to every path having m-length >= 1, over the full path list.

    A conic solver finds the active set; the minimum-norm solution on that set
    is then recomputed in closed form and kept when it is still feasible.
    """
    import cvxpy as cp

    verts = list(adj)
    idx = {v: k for k, v in enumerate(verts)}
    paths = minimal_path_sets(adj, V1, V2)
    if not paths:
        return 0.0
    A = np.zeros((len(paths), len(verts)))
    for k, p in enumerate(paths):
        A[k, [idx[v] for v in p]] = 1.0
    m = cp.Variable(len(verts), nonneg=True)
    cp.Problem(cp.Minimize(cp.sum_squares(m)), [A @ m >= 1]).solve(solver="CVXOPT")
    x = np.maximum(m.value, 0.0)
    active = A @ x <= 1 + 1e-6
    support = x > 1e-6
    As = A[np.ix_(active, support)]
    polished = np.zeros_like(x)
    polished[support] = As.T @ np.linalg.lstsq(As @ As.T, np.ones(int(active.sum())), rcond=None)[0]
    if np.all(A @ polished >= 1 - 1e-12) and np.all(polished >= -1e-12):
        x = polished
    return float(x @ x)


def dense_resistance(vertices, edges, weights, V1, V2) -> float:
    """Effective resistance with V1 shorted to ground and V2 shorted to the source."""
    idx = {v: k for k, v in enumerate(vertices)}
    n = len(vertices)
    L = np.zeros((n, n))
    for (u, v), w in zip(edges, weights):
        i, j = idx[u], idx[v]
        L[i, i] += w
        L[j, j] += w
        L[i, j] -= w
        L[j, i] -= w
    # merge each terminal set into one node
    group = np.arange(n)
    a, b = idx[V1[0]], idx[V2[0]]
    for v in V1:
        group[idx[v]] = a
    for v in V2:
        group[idx[v]] = b
    keep = sorted(set(group.tolist()))
    pos = {g: k for k, g in enumerate(keep)}
    M = np.zeros((n, len(keep)))
    for k in range(n):
        M[k, pos[group[k]]] = 1.0
    Lm = M.T @ L @ M
    Lp = np.linalg.pinv(Lm)
    e = np.zeros(len(keep))
    e[pos[a]], e[pos[b]] = 1.0, -1.0
    return float(e @ Lp @ e)


# --- hyperbolic space ---------------------------------------------------------------------------

def boost_to_origin(q: np.ndarray) -> np.ndarray:
    """Lorentz matrix (signature + + + -) sending the Klein point q to the centre of the ball."""
    q = np.asarray(q, float)
    s = float(q @ q)
    g = 1.0 / math.sqrt(1.0 - s)
    B = np.eye(4)
    if s > 0:
        n = q / math.sqrt(s)
        B[:3, :3] += (g - 1) * np.outer(n, n)
    B[:3, 3] = -g * q
    B[3, :3] = -g * q
    B[3, 3] = g
    return B


def plane_through(points: np.ndarray, interior_hint: np.ndarray) -> Tuple[np.ndarray, float]:
    """Plane n.x = h through the three most spread points, n pointing away from ``interior_hint``."""
    pts = np.asarray(points, float)
    a = pts[0]
    b = pts[np.argmax(np.linalg.norm(pts - a, axis=1))]
    c = pts[np.argmax(np.linalg.norm(np.cross(pts - a, b - a), axis=1))]
    n = np.cross(b - a, c - a)
    n /= np.linalg.norm(n)
    h = float(n @ a)
    if n @ interior_hint > h:
        n, h = -n, -h
    return n, h


def dihedral_at(n1, h1, n2, h2, q) -> float:
    """Interior angle between two Klein-model half-spaces n.x <= h, measured at q on both planes.

    After boosting q to the origin the model is conformal there, so the
    Euclidean angle between the boosted planes is the hyperbolic one.
    """
    B = boost_to_origin(q)
    N1 = B @ np.append(n1, h1)
    N2 = B @ np.append(n2, h2)
    m1 = N1[:3] / np.linalg.norm(N1[:3])
    m2 = N2[:3] / np.linalg.norm(N2[:3])
    return math.pi - math.acos(max(-1.0, min(1.0, float(m1 @ m2))))


# --- arcs --------------------------------------------------------------------------------------

def clockwise_sweep(centre: complex, start: complex, end: complex) -> float:
    a0 = math.atan2((start - centre).imag, (start - centre).real)
    a1 = math.atan2((end - centre).imag, (end - centre).real)
    return (a0 - a1) % TWO_PI


def chain_corners(c: Sequence[complex], r: Sequence[float]) -> List[complex]:
    """Crossing point of each consecutive circle pair on the inner side of a ccw chain."""
    out = []
    n = len(c)
    for k in range(n):
        p, q = c[k], c[(k + 1) % n]
        pts = _pair_points(p, r[k], q, r[(k + 1) % n])
        if not pts:   # tangent up to rounding
            pts = [p + (q - p) * r[k] / (r[k] + r[(k + 1) % n])]
        left = [z for z in pts if ((q - p).conjugate() * (z - p)).imag > 0]
        out.append(left[0] if left else pts[0])
    return out


def brute_cycles(adj: Dict[Hashable, Iterable], max_len: int) -> set:
    """Every simple cycle with 3..max_len vertices, as frozensets of its edges."""
    out = set()
    order = sorted(adj)

    def walk(path, seen):
        here = path[-1]
        for w in adj[here]:
            if w == path[0] and len(path) >= 3:
                out.add(frozenset(frozenset(p) for p in zip(path, path[1:] + [path[0]])))
            elif w not in seen and w > path[0] and len(path) < max_len:
                walk(path + [w], seen | {w})
    for s in order:
        walk([s], {s})
    return out


def face_conditions(a: float, b: float, c: float) -> Tuple[bool, bool]:
    """(Z1, Z4) on a face with angles a, b, c, evaluated straight from the inequalities."""
    z1 = a + b + c <= math.pi or all(x + y < math.pi + z for x, y, z in ((a, b, c), (b, c, a), (c, a, b)))
    z4 = all(math.cos(x) + math.cos(y) * math.cos(z) >= 0 for x, y, z in ((a, b, c), (b, c, a), (c, a, b)))
    return z1, z4
