"""Two- and three-circle geometry in Euclidean and hyperbolic background.

Conventions
-----------
Inside a triple, ``angles[a]`` is the intersection angle on the edge opposite
corner ``a``. Hyperbolic radii may be ``inf``; such a corner is an ideal
vertex (the circle is a horocycle) and its inner angle is 0.

Conformal factors are ``u = log r`` (Euclidean) and ``u = log tanh(r/2)``
(hyperbolic). In the Poincare disk, a hyperbolic circle of radius r centred
at the origin has Euclidean radius ``exp(u)``; horocycles sit at ``u = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import (ConfigurationInfeasible, DegenerateTriangle, NoConvergence,
                     NonPositiveRadius, OutsideDisk)

EUCLIDEAN = "euclidean"
HYPERBOLIC = "hyperbolic"
GEOMETRIES = (EUCLIDEAN, HYPERBOLIC)

COMMON_POINT_TOL = 1e-9   # band on the input angle sum
GEOM_TOL = 1e-8           # absolute distance tolerance of geometric checks


def _check_geometry(geometry):
    if geometry not in GEOMETRIES:
        raise ValueError(f"unknown geometry {geometry!r}")


# --- primitives ------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    """Euclidean circle; hyperbolic circles also carry their hyperbolic radius."""

    center: complex
    radius: float
    geometry: str = EUCLIDEAN
    rho: Optional[float] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise NonPositiveRadius(f"radius must be positive, got {self.radius}")

    def contains(self, z, tol: float = 0.0):
        return np.abs(np.asarray(z) - self.center) <= self.radius + tol

    def scaled(self, a: complex, b: complex = 0) -> "Circle":
        """Image under z -> a z + b."""
        return Circle(a * self.center + b, abs(a) * self.radius, EUCLIDEAN)


class Relation(Enum):
    DISJOINT = "disjoint"
    NESTED = "nested"


class IntersectionKind(Enum):
    INTERSTICE = "interstice"
    COMMON_POINT = "common_point"
    OVERLAP = "overlap"


@dataclass
class TripleConfig:
    """Three circles around a face; ``angles[a]`` sits on the edge opposite corner a."""

    radii: Tuple[float, float, float]
    angles: Tuple[float, float, float]
    geometry: str = EUCLIDEAN

    def __post_init__(self):
        _check_geometry(self.geometry)
        self.radii = tuple(float(r) for r in self.radii)
        self.angles = tuple(float(t) for t in self.angles)
        for r in self.radii:
            if not r > 0:
                raise NonPositiveRadius(f"radius must be positive, got {r}")

    @property
    def lengths(self) -> Tuple[float, float, float]:
        """(l_ij, l_jk, l_ki)."""
        (ri, rj, rk), (ti, tj, tk) = self.radii, self.angles
        g = self.geometry
        return (float(edge_length(ri, rj, tk, g)), float(edge_length(rj, rk, ti, g)),
                float(edge_length(rk, ri, tj, g)))

    @property
    def inner_angles(self) -> Tuple[float, float, float]:
        return inner_angles(*self.lengths, self.geometry)


# --- lengths and angles ----------------------------------------------------------

def edge_length(r_i, r_j, theta, geometry=EUCLIDEAN):
    """Distance between centres of two circles meeting at angle theta."""
    _check_geometry(geometry)
    r_i, r_j, theta = np.asarray(r_i, float), np.asarray(r_j, float), np.asarray(theta, float)
    if np.any(r_i <= 0) or np.any(r_j <= 0):
        raise NonPositiveRadius("radii must be positive")
    if geometry == EUCLIDEAN:
        out = np.sqrt(r_i * r_i + r_j * r_j + 2 * r_i * r_j * np.cos(theta))
    else:
        # cosh l - 1 written without cancellation for small radii
        q = _cosh_minus_one(r_i, r_j, theta)
        out = _arccosh1p(q)
    return out[()] if out.ndim == 0 else out


def _arccosh1p(q):
    # arccosh(1 + q) = log1p(q + sqrt(q (q + 2)))
    return np.log1p(q + np.sqrt(q * (q + 2)))


def _cosh_minus_one(a, b, theta):
    sa, sb = np.sinh(a / 2), np.sinh(b / 2)
    return 2 * sa * sa + 2 * sb * sb + 4 * sa * sa * sb * sb + np.sinh(a) * np.sinh(b) * np.cos(theta)


def inner_angles(l_ij, l_jk, l_ki, geometry=EUCLIDEAN):
    """Angles (at i, j, k) of the triangle with the given side lengths."""
    _check_geometry(geometry)
    sides = np.array([l_jk, l_ki, l_ij], float)  # side opposite i, j, k
    a, b, c = sides
    if np.any(sides <= 0):
        raise DegenerateTriangle("side lengths must be positive")
    scale = sides.max()
    if a + b <= c * (1 + 1e-12) or b + c <= a * (1 + 1e-12) or c + a <= b * (1 + 1e-12) or \
            min(a + b - c, b + c - a, c + a - b) <= 1e-12 * scale:
        raise DegenerateTriangle(f"side lengths {(l_ij, l_jk, l_ki)} violate the triangle inequality")
    out = []
    for k in range(3):
        opp, s1, s2 = sides[k], sides[(k + 1) % 3], sides[(k + 2) % 3]
        if geometry == EUCLIDEAN:
            c_ = (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2)
        else:
            c_ = (math.cosh(s1) * math.cosh(s2) - math.cosh(opp)) / (math.sinh(s1) * math.sinh(s2))
        out.append(math.acos(min(1.0, max(-1.0, c_))))
    return tuple(out)


# --- condition predicates on a triple ---------------------------------------------

def sum_condition(angles) -> bool:
    """Angle sum at most pi."""
    return sum(angles) <= math.pi + 1e-12


def strict_triangle_condition(angles) -> bool:
    """Each pairwise sum strictly below pi plus the third."""
    a, b, c = angles
    return a + b < math.pi + c and b + c < math.pi + a and c + a < math.pi + b


def cos_condition(angles, tol: float = 1e-12) -> bool:
    """cos a + cos b cos c >= 0 for every labelling."""
    ca, cb, cc = (math.cos(t) for t in angles)
    return min(ca + cb * cc, cb + cc * ca, cc + ca * cb) >= -tol


def _require_layout_condition(angles):
    for t in angles:
        if not (0.0 <= t < math.pi):
            raise ConfigurationInfeasible(f"angle {t} outside [0, pi)")
    if not (sum_condition(angles) or strict_triangle_condition(angles)):
        raise ConfigurationInfeasible(f"angles {tuple(angles)} admit no three-circle configuration")


# --- vectorised face kernel -------------------------------------------------------

def face_angles(r, theta, geometry=EUCLIDEAN, derivative=False):
    """Inner angles of many faces at once.

    Parameters
    ----------
    r : (F, 3) radii (hyperbolic entries may be ``inf`` for horocycles)
    theta : (F, 3) intersection angles, column a opposite corner a
    derivative : also return ``d[f, a, b] = d angle_a / d u_b``

    Returns
    -------
    angles : (F, 3)
    bad : (F,) bool, faces whose side lengths violate the triangle inequality
    d : (F, 3, 3), only when ``derivative``
    """
    _check_geometry(geometry)
    r = np.atleast_2d(np.asarray(r, float))
    theta = np.atleast_2d(np.asarray(theta, float))
    if geometry == EUCLIDEAN:
        return _face_angles_euclidean(r, theta, derivative)
    return _face_angles_hyperbolic(r, theta, derivative)


def _face_angles_euclidean(r, th, derivative):
    F = r.shape[0]
    cth = np.cos(th)
    # side opposite corner a joins the other two corners
    b_idx = np.array([1, 2, 0])
    c_idx = np.array([2, 0, 1])
    rb, rc = r[:, b_idx], r[:, c_idx]
    L2 = rb * rb + rc * rc + 2 * rb * rc * cth
    L = np.sqrt(np.maximum(L2, 0.0))
    Lb, Lc = L[:, b_idx], L[:, c_idx]
    cos_a = (Lb * Lb + Lc * Lc - L * L) / (2 * Lb * Lc)
    bad = np.any((cos_a >= 1.0) | (cos_a <= -1.0) | ~np.isfinite(cos_a), axis=1)
    ang = np.arccos(np.clip(cos_a, -1.0, 1.0))
    if not derivative:
        return ang, bad
    # d angle_a / d L_s for s = a (opposite) and the two adjacent sides
    sin_a = np.sin(ang)
    with np.errstate(divide="ignore", invalid="ignore"):
        two_area = Lb * Lc * sin_a  # same for every a
        dA_dLa = L / two_area
        # d angle_a / d L_b = -L_a cos(angle_c) / (2 Area)
        dA_dLb = -L * np.cos(ang[:, c_idx]) / two_area
        dA_dLc = -L * np.cos(ang[:, b_idx]) / two_area
        # d L_s / d r_x for the two endpoints of side s
        dLs_drb = (rb + rc * cth) / L   # endpoint b of side a
        dLs_drc = (rc + rb * cth) / L
    dr = np.zeros((F, 3, 3))
    # side s (opposite s) has endpoints b_idx[s], c_idx[s]
    for a in range(3):
        for s, coef in ((a, dA_dLa[:, a]), (b_idx[a], dA_dLb[:, a]), (c_idx[a], dA_dLc[:, a])):
            dr[:, a, b_idx[s]] += coef * dLs_drb[:, s]
            dr[:, a, c_idx[s]] += coef * dLs_drc[:, s]
    du = dr * r[:, None, :]
    return ang, bad, du


def _face_angles_hyperbolic(r, th, derivative):
    F = r.shape[0]
    ideal = ~np.isfinite(r)
    rf = np.where(ideal, 1.0, r)
    C = np.where(ideal, 0.5, np.cosh(rf))
    S = np.where(ideal, 0.5, np.sinh(rf))
    half = np.where(ideal, 0.0, np.sinh(rf / 2))
    cth = np.cos(th)
    b_idx = np.array([1, 2, 0])
    c_idx = np.array([2, 0, 1])
    Cb, Cc, Sb, Sc = C[:, b_idx], C[:, c_idx], S[:, b_idx], S[:, c_idx]
    finite_pair = ~(ideal[:, b_idx] | ideal[:, c_idx])
    # q = Q - 1 for finite sides (accurate for short sides); Q itself otherwise
    hb, hc = half[:, b_idx], half[:, c_idx]
    q_fin = 2 * hb * hb + 2 * hc * hc + 4 * hb * hb * hc * hc + Sb * Sc * cth
    Q = np.where(finite_pair, 1.0 + q_fin, Cb * Cc + Sb * Sc * cth)
    P = np.where(finite_pair, q_fin * (q_fin + 2), Q * Q)   # sinh^2 of the side (scaled)
    Qb, Qc, Pb, Pc = Q[:, b_idx], Q[:, c_idx], P[:, b_idx], P[:, c_idx]
    all_fin = finite_pair.all(axis=1, keepdims=True)
    qb, qc = q_fin[:, b_idx], q_fin[:, c_idx]
    N = np.where(all_fin, qb + qc - q_fin + qb * qc, Qb * Qc - Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        D = np.sqrt(Pb * Pc)
        cos_a = N / D
    cos_a = np.where(ideal, 1.0, cos_a)
    bad = np.any(((cos_a > 1.0) & ~ideal) | (cos_a <= -1.0) | ~np.isfinite(cos_a), axis=1)
    ang = np.where(ideal, 0.0, np.arccos(np.clip(cos_a, -1.0, 1.0)))
    if not derivative:
        return ang, bad
    sin_a = np.sin(ang)
    # dQ_s/d rho_x for the endpoints of side s (zero for ideal endpoints)
    dQs_db = np.where(ideal[:, b_idx], 0.0, Sb * Cc + Cb * Sc * cth)
    dQs_dc = np.where(ideal[:, c_idx], 0.0, Cb * Sc + Sb * Cc * cth)
    drho = np.zeros((F, 3, 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        for a in range(3):
            bb, cc = b_idx[a], c_idx[a]
            # cos = (Q_b Q_c - Q_a) / sqrt(P_b P_c); P_s = Q_s^2 - eta_s
            dcos_dQa = -1.0 / D[:, a]
            dcos_dQb = Qc[:, a] / D[:, a] - cos_a[:, a] * Q[:, bb] / P[:, bb]
            dcos_dQc = Qb[:, a] / D[:, a] - cos_a[:, a] * Q[:, cc] / P[:, cc]
            coef = -1.0 / sin_a[:, a]
            for s, g in ((a, dcos_dQa), (bb, dcos_dQb), (cc, dcos_dQc)):
                drho[:, a, b_idx[s]] += coef * g * dQs_db[:, s]
                drho[:, a, c_idx[s]] += coef * g * dQs_dc[:, s]
    drho = np.where(ideal[:, :, None], 0.0, drho)
    # d/du = sinh(rho) d/drho; horocycle columns stay zero
    du = drho * np.where(ideal, 0.0, S)[:, None, :]
    return ang, bad, du


# --- three-circle operations ------------------------------------------------------

def hyperbolic_to_euclidean_circle(center: complex, rho: float) -> Circle:
    """Euclidean support of the hyperbolic circle of radius rho about ``center`` in the disk."""
    s = 2 * math.atanh(min(abs(center), 1 - 1e-300)) if center != 0 else 0.0
    a, b = math.tanh((s - rho) / 2), math.tanh((s + rho) / 2)
    phase = center / abs(center) if center != 0 else 1.0
    return Circle(complex(phase * (a + b) / 2), (b - a) / 2, HYPERBOLIC, rho)


def three_circle_layout(cfg: TripleConfig) -> Tuple[Circle, Circle, Circle]:
    """Canonical placement: i at the origin, j on the positive real axis, k above it.

    Hyperbolic triples are placed in the Poincare disk and returned as
    Euclidean support circles tagged with their hyperbolic radii.
    """
    _require_layout_condition(cfg.angles)
    l_ij, l_jk, l_ki = cfg.lengths
    try:
        t_i, _, _ = inner_angles(l_ij, l_jk, l_ki, cfg.geometry)
    except DegenerateTriangle as exc:
        raise ConfigurationInfeasible(str(exc), witness=cfg) from exc
    ri, rj, rk = cfg.radii
    if cfg.geometry == EUCLIDEAN:
        return (Circle(0j, ri), Circle(complex(l_ij, 0), rj),
                Circle(l_ki * complex(math.cos(t_i), math.sin(t_i)), rk))
    pj = complex(math.tanh(l_ij / 2), 0)
    pk = math.tanh(l_ki / 2) * complex(math.cos(t_i), math.sin(t_i))
    return (hyperbolic_to_euclidean_circle(0j, ri), hyperbolic_to_euclidean_circle(pj, rj),
            hyperbolic_to_euclidean_circle(pk, rk))


def circle_intersection_angle(c1: Circle, c2: Circle):
    """Exterior intersection angle in [0, pi], or a Relation when the circles do not cross."""
    d = abs(c1.center - c2.center)
    r1, r2 = c1.radius, c2.radius
    num = d * d - r1 * r1 - r2 * r2
    # relative slack so that tangent circles built from rounded distances still meet
    if abs(num) <= 2 * r1 * r2 * (1 + 1e-12):
        return math.acos(max(-1.0, min(1.0, num / (2 * r1 * r2))))
    return Relation.DISJOINT if d > r1 + r2 else Relation.NESTED


def radical_center(c1: Circle, c2: Circle, c3: Circle) -> complex:
    """Point of equal power with respect to three circles (non-collinear centres)."""
    p = [c1.center, c2.center, c3.center]
    r = [c1.radius, c2.radius, c3.radius]
    # |z|^2 - 2 Re(conj(p) z) + |p|^2 - r^2 equal for all three -> linear system
    A = np.array([[2 * (p[1] - p[0]).real, 2 * (p[1] - p[0]).imag],
                  [2 * (p[2] - p[0]).real, 2 * (p[2] - p[0]).imag]])
    b = np.array([abs(p[1]) ** 2 - r[1] ** 2 - abs(p[0]) ** 2 + r[0] ** 2,
                  abs(p[2]) ** 2 - r[2] ** 2 - abs(p[0]) ** 2 + r[0] ** 2])
    x, y = np.linalg.solve(A, b)
    return complex(x, y)


def kind_from_angles(angles) -> IntersectionKind:
    s = sum(angles)
    if abs(s - math.pi) < COMMON_POINT_TOL:
        return IntersectionKind.COMMON_POINT
    return IntersectionKind.INTERSTICE if s < math.pi else IntersectionKind.OVERLAP


def triple_intersection_kind(cfg: TripleConfig, verify: bool = True) -> IntersectionKind:
    """Whether the three closed disks share no point, one point, or a region.

    The answer comes from the angle sum; with ``verify`` the power of the
    radical centre with respect to the laid-out circles must agree in sign
    whenever it is clear of the tolerance band.
    """
    circles = three_circle_layout(cfg)
    kind = kind_from_angles(cfg.angles)
    if verify:
        z = radical_center(*circles)
        scale = max(c.radius for c in circles)
        power = abs(z - circles[0].center) ** 2 - circles[0].radius ** 2
        rel = power / scale ** 2
        ok = {IntersectionKind.INTERSTICE: rel > -1e-7,
              IntersectionKind.COMMON_POINT: abs(rel) < 1e-6,
              IntersectionKind.OVERLAP: rel < 1e-7}[kind]
        if not ok:
            raise ConfigurationInfeasible(
                f"radical-centre power {power:.3e} disagrees with angle sum classification {kind.value}",
                witness=cfg)
    return kind


@dataclass
class AngleJacobian:
    dr: np.ndarray   # d angle_a / d r_b
    du: np.ndarray   # d angle_a / d u_b


def angle_jacobian(cfg: TripleConfig) -> AngleJacobian:
    if not cos_condition(cfg.angles):
        raise ConfigurationInfeasible(f"angles {cfg.angles} violate the cos condition", witness=cfg)
    r = np.array([cfg.radii])
    th = np.array([cfg.angles])
    ang, bad, du = face_angles(r, th, cfg.geometry, derivative=True)
    if bad[0]:
        raise ConfigurationInfeasible("degenerate triangle", witness=cfg)
    du = du[0]
    if cfg.geometry == EUCLIDEAN:
        dr = du / r[0][None, :]
    else:
        dr = du / np.sinh(r[0])[None, :]
    return AngleJacobian(dr, du)


@dataclass
class DerivativeBound:
    cross: np.ndarray      # cross[i, j] = r_j d angle_i / d r_j, i != j
    angles: np.ndarray
    ratio: np.ndarray      # cross / angle_i (nan on the diagonal)
    bound: float
    holds: bool
    asserted: bool         # the bound is only claimed in Euclidean geometry


def derivative_bound_constant(eps: float) -> float:
    # ratio <= tan(angle) / angle <= tan 1 for small angles, <= 2 / sin(eps) otherwise
    return max(2.0 / math.sin(eps), math.tan(1.0))


def angle_derivative_bound(cfg: TripleConfig, eps: float) -> DerivativeBound:
    if any(t > math.pi - eps + 1e-12 or t < 0 for t in cfg.angles):
        raise ConfigurationInfeasible(f"angles {cfg.angles} exceed pi - eps")
    jac = angle_jacobian(cfg)
    ang = np.array(cfg.inner_angles)
    r = np.array(cfg.radii)
    cross = jac.dr * r[None, :]
    ratio = cross / ang[:, None]
    np.fill_diagonal(ratio, np.nan)
    off = ~np.eye(3, dtype=bool)
    C = derivative_bound_constant(eps)
    holds = bool(np.all(cross[off] >= -1e-12) and np.all(ratio[off] < C))
    return DerivativeBound(cross, ang, ratio, C, holds, cfg.geometry == EUCLIDEAN)


# --- the four-disk example ---------------------------------------------------------

@dataclass
class QuadrilateralResult:
    l13: float
    sum_radii: float
    relation: str            # "overlap", "tangent" or "disjoint"
    theta13: Optional[float]


def quadrilateral_diagonal(x: float, y: float, z: float, theta: float = 2 * math.pi / 3) -> QuadrilateralResult:
    """Glue triangles v1 v2 v4 and v3 v2 v4 along [v2, v4]; measure disks 1 and 3.

    Radii are r1 = r3 = x, r2 = y, r4 = z and every prescribed edge carries
    the angle ``theta``.
    """
    for v in (x, y, z):
        if not v > 0:
            raise NonPositiveRadius("radii must be positive")
    l24 = float(edge_length(y, z, theta))
    l12 = float(edge_length(x, y, theta))
    l14 = float(edge_length(x, z, theta))
    # v2 at the origin, v4 on the real axis, v1 above and v3 its mirror image
    a = (l12 * l12 - l14 * l14 + l24 * l24) / (2 * l24)
    h = math.sqrt(max(l12 * l12 - a * a, 0.0))
    l13 = 2 * h
    s = 2 * x
    if abs(l13 - s) <= 1e-12 * s:
        return QuadrilateralResult(l13, s, "tangent", 0.0)
    if l13 < s:
        return QuadrilateralResult(l13, s, "overlap", math.acos((l13 * l13 - 2 * x * x) / (2 * x * x)))
    return QuadrilateralResult(l13, s, "disjoint", None)


# --- generalized cycles in the disk ------------------------------------------------

@dataclass(frozen=True)
class GeneralizedCycle:
    kind: str             # "circle", "horocycle" or "hypercycle"
    circle: Circle
    g: float
    rho: Optional[float] = None
    alpha: Optional[float] = None


HOROCYCLE_TOL = 1e-10


def inversive_curvature(center: complex, radius: float) -> float:
    """(1 + r^2 - |c|^2) / (2 r): equals g for every kind of cycle."""
    d2 = abs(center) ** 2
    return (1.0 + radius * radius - d2) / (2.0 * radius)


def geodesic_curvature(C: Circle) -> GeneralizedCycle:
    """Classify a Euclidean circle meeting the unit disk and return its geodesic curvature."""
    d, r = abs(C.center), C.radius
    if d >= 1 + r or d <= r - 1:
        raise OutsideDisk(f"circle (|c|={d}, r={r}) misses the open unit disk")
    if abs(d + r - 1) <= HOROCYCLE_TOL:
        return GeneralizedCycle("horocycle", C, 1.0)
    if d + r < 1:
        rho = math.atanh(d + r) - math.atanh(d - r)
        return GeneralizedCycle("circle", C, 1.0 / math.tanh(rho), rho=rho)
    g = (1 + r * r - d * d) / (2 * r)
    return GeneralizedCycle("hypercycle", C, g, alpha=math.acos(max(-1.0, min(1.0, -g))))


def _radius_for_curvature(r0: float, theta: float, g: float) -> float:
    # cycle meeting the origin-centred circle of radius r0 at angle theta
    denom = 2 * (g + r0 * math.cos(theta))
    if denom <= 0:
        raise ConfigurationInfeasible(f"no cycle of curvature {g} meets the central circle at angle {theta}")
    return (1 - r0 * r0) / denom


@dataclass
class CycleTriple:
    cycles: Tuple[GeneralizedCycle, GeneralizedCycle, GeneralizedCycle]
    angles: Tuple[float, float, float]
    iterations: int


def cycle_from_curvature(g_i: float, g_j: float, theta_k: float, g_k: float,
                         theta_i: float, theta_j: float, max_iter: int = 200) -> CycleTriple:
    """Place C_i (centred at 0), C_j, then solve for C_k with curvature g_k.

    ``theta_k`` is the angle between C_i and C_j, ``theta_i`` between C_j and
    C_k, ``theta_j`` between C_i and C_k. The radius of C_k is found by
    bisection on [1e-12, 1e6], using that the curvature decreases in it.
    """
    if not g_i > 1:
        raise ConfigurationInfeasible("the central cycle must be a hyperbolic circle (g > 1)")
    if not (g_j > -1 and g_k > -1):
        raise ConfigurationInfeasible("curvatures must exceed -1")
    _require_layout_condition((theta_i, theta_j, theta_k))
    rho_i = math.atanh(1.0 / g_i)   # coth(rho) = g
    r_i = math.tanh(rho_i / 2)
    r_j = _radius_for_curvature(r_i, theta_k, g_j)
    d_j = math.sqrt(r_i * r_i + r_j * r_j + 2 * r_i * r_j * math.cos(theta_k))

    def g_of(rk):
        d = math.sqrt(r_i * r_i + rk * rk + 2 * r_i * rk * math.cos(theta_j))
        return inversive_curvature(complex(d, 0), rk)

    lo, hi = 1e-12, 1e6
    if not (g_of(lo) >= g_k >= g_of(hi)):
        raise ConfigurationInfeasible(f"target curvature {g_k} outside the bracket")
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if g_of(mid) > g_k:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    r_k = 0.5 * (lo + hi)
    if abs(g_of(r_k) - g_k) > 1e-10 * max(1.0, abs(g_k)):
        raise NoConvergence(f"bisection stalled at curvature {g_of(r_k)} vs {g_k}")
    d_k = math.sqrt(r_i * r_i + r_k * r_k + 2 * r_i * r_k * math.cos(theta_j))
    l_jk = math.sqrt(r_j * r_j + r_k * r_k + 2 * r_j * r_k * math.cos(theta_i))
    cos_phi = (d_j * d_j + d_k * d_k - l_jk * l_jk) / (2 * d_j * d_k)
    if not -1 <= cos_phi <= 1:
        raise ConfigurationInfeasible("the three cycles cannot be placed with these angles")
    phi = math.acos(cos_phi)
    Ci = Circle(0j, r_i)
    Cj = Circle(complex(d_j, 0), r_j)
    Ck = Circle(d_k * complex(math.cos(phi), math.sin(phi)), r_k)
    cyc = tuple(geodesic_curvature(c) for c in (Ci, Cj, Ck))
    return CycleTriple(cyc, (theta_i, theta_j, theta_k), it)  # type: ignore[arg-type]


# --- Mobius maps of the disk -------------------------------------------------------

def disk_automorphism(a: complex, rotation: complex = 1.0):
    """z -> rotation * (z - a) / (1 - conj(a) z), sending a to 0."""
    ca = np.conj(a)

    def f(z):
        z = np.asarray(z, complex)
        return rotation * (z - a) / (1 - ca * z)

    return f


def circumcircle(p: complex, q: complex, s: complex) -> Tuple[complex, float]:
    A = np.array([[2 * (q - p).real, 2 * (q - p).imag], [2 * (s - p).real, 2 * (s - p).imag]])
    b = np.array([abs(q) ** 2 - abs(p) ** 2, abs(s) ** 2 - abs(p) ** 2])
    x, y = np.linalg.solve(A, b)
    c = complex(x, y)
    return c, abs(p - c)


def map_circle(f, C: Circle) -> Circle:
    """Image of a circle under a Mobius map that keeps it bounded."""
    pts = C.center + C.radius * np.exp(1j * np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3]))
    w = f(pts)
    c, r = circumcircle(*w)
    return Circle(c, r, C.geometry, C.rho)
