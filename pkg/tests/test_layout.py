import math

import numpy as np
import pytest

import oracles as O
from conftest import random_angles, solved_pattern
from cirpat.errors import CircleOutsideCarrier, HolonomyViolation
from cirpat.geometry import HYPERBOLIC, Circle, edge_length
from cirpat.lattices import lattice_ball, wheel
from cirpat.layout import (CarrierKind, LaidOutPattern, carrier_info, circle_count, covering_multiplicity,
                           cross_section_loop, develop, distortion, sample_carrier, to_svg, validate_rcp)
from cirpat.triangulation import AngleFunction, build_triangulation


def four_disks(x, y, z, theta=2 * math.pi / 3):
    """Triangles v1 v2 v4 and v3 v4 v2 glued along [v2, v4], radii r1 = r3 = x, r2 = y, r4 = z."""
    T = build_triangulation([1, 2, 3, 4], [(1, 2, 4), (3, 4, 2)])
    return develop(T, AngleFunction.constant(T, theta), {1: x, 2: y, 3: x, 4: z})


# --- development ----------------------------------------------------------------------------

def test_flat_wheel_development():
    W = wheel(6)
    P = develop(W, AngleFunction.constant(W, 0.0), np.ones(7))
    assert P.circles[0].center == 0
    assert P.circles[W.ring(0)[0]].center == pytest.approx(2 + 0j)
    got = sorted(np.angle([P.circles[v].center for v in W.boundary]) % (2 * math.pi))
    assert np.allclose(got, np.arange(6) * math.pi / 3, atol=1e-12)
    assert all(abs(P.circles[v].center) == pytest.approx(2) for v in W.boundary)


def test_lattice_edges_remeasured(rng):
    T = lattice_ball(6, 5)
    theta = random_angles(T, rng)
    ra, P = solved_pattern(T, theta)
    for i, j in T.edges:
        ci, cj = P.circles[i], P.circles[j]
        assert abs(abs(ci.center - cj.center) - O.centre_distance(ci.radius, cj.radius, theta(i, j))) < 1e-8
        assert abs(O.meeting_angle(ci.center, ci.radius, cj.center, cj.radius) - theta(i, j)) < 1e-8
        assert abs(P.realized[(i, j)] - theta(i, j)) < 1e-8


def test_hyperbolic_development_distances(rng):
    T = lattice_ball(7, 2)
    theta = random_angles(T, rng)
    ra, P = solved_pattern(T, theta, 1.0, HYPERBOLIC)
    for i, j in T.edges:
        zi, zj = P.points[i], P.points[j]
        d = 2 * math.atanh(abs(zi - zj) / abs(1 - np.conj(zi) * zj))
        assert abs(d - edge_length(ra[i], ra[j], theta(i, j), HYPERBOLIC)) < 1e-8
    for v in T.vertices:
        C = P.circles[v]
        assert abs(C.center) + C.radius < 1


def test_perturbed_radii_fail_holonomy():
    T = lattice_ball(6, 2)
    theta = AngleFunction.constant(T, 0.0)
    r = np.ones(len(T.vertices))
    r[T.index[T.interior[1]]] = 1.2
    with pytest.raises(HolonomyViolation):
        develop(T, theta, r)


# --- regularity ----------------------------------------------------------------------------

def test_four_disk_case_one_has_extra_contact():
    rep = validate_rcp(four_disks(1, 1, 1))
    assert not rep.is_rcp and rep.extra_contacts == [(1, 3)]
    assert set(rep.reducible_edges) == {(1, 3), (2, 4)}


def test_four_disk_case_three_is_regular():
    rep = validate_rcp(four_disks(1, 4, 4))
    assert rep.is_rcp and rep.extra_contacts == [] and rep.extraneous_tangencies == []


def test_extraneous_tangency_configuration(rng):
    T = build_triangulation([1, 2, 3, 4], [(1, 2, 4), (3, 4, 2)])
    theta = AngleFunction({(1, 2): math.pi / 2, (2, 3): math.pi / 2, (3, 4): math.pi / 2, (1, 4): math.pi / 2,
                           (2, 4): 0.0})
    for _ in range(20):
        x, y, z, w = np.exp(rng.uniform(-1.5, 1.5, 4))
        P = develop(T, theta, {1: x, 2: y, 3: w, 4: z})
        rep = validate_rcp(P)
        assert rep.extraneous_tangencies == [(1, 3)]


def test_common_points_of_extra_contacts_lie_in_third_disk():
    P = four_disks(1, 1, 1)
    c1, c3 = P.circles[1], P.circles[3]
    t = np.linspace(0, 2 * math.pi, 2000)
    pts = np.concatenate([c1.center + c1.radius * np.exp(1j * t), c3.center + c3.radius * np.exp(1j * t)])
    grid = (np.linspace(-3, 3, 301)[:, None] + 1j * np.linspace(-3, 3, 301)[None, :]).ravel()
    common = np.concatenate([pts, grid])
    common = common[(np.abs(common - c1.center) <= c1.radius) & (np.abs(common - c3.center) <= c3.radius)]
    assert len(common) > 100
    others = [P.circles[2], P.circles[4]]
    assert all(any(abs(z - C.center) <= C.radius + 1e-12 for C in others) for z in common)


def test_disks_stay_in_neighbours_or_star(rng):
    checked = 0
    for T, theta in ((lattice_ball(6, 3), None), (lattice_ball(7, 2), None)):
        theta = random_angles(T, rng)
        P = solved_pattern(T, theta)[1]
        for v in T.interior:
            C = P.circles[v]
            pts = C.center + C.radius * np.sqrt(rng.random(400)) * np.exp(2j * math.pi * rng.random(400))
            ring = T.ring(v)
            in_nb = np.zeros(len(pts), bool)
            for w in ring:
                in_nb |= np.abs(pts - P.circles[w].center) <= P.circles[w].radius
            in_star = np.zeros(len(pts), bool)
            for k in range(len(ring)):
                tri = np.array([C.center, P.circles[ring[k]].center, P.circles[ring[(k + 1) % len(ring)]].center])
                in_star |= _in_triangle(pts, tri)
            assert np.all(in_nb | in_star)
            checked += 1
    assert checked >= 20


def _in_triangle(z, tri):
    a, b, c = tri
    s = [((q - p).conjugate() * (z - p)).imag for p, q in ((a, b), (b, c), (c, a))]
    return ((s[0] >= -1e-12) & (s[1] >= -1e-12) & (s[2] >= -1e-12)) | ((s[0] <= 1e-12) & (s[1] <= 1e-12) & (s[2] <= 1e-12))


def test_similarity_invariance(hex_packing, rng):
    P = four_disks(1, 1, 1)
    a, b = 2.5 * np.exp(0.7j), 3 - 4j
    Q = P.transformed(a, b)
    assert validate_rcp(Q).extra_contacts == validate_rcp(P).extra_contacts
    pts = sample_carrier(hex_packing, 5000, np.random.default_rng(1))
    S = hex_packing.transformed(a, b)
    rp = covering_multiplicity(hex_packing, pts)
    rs = covering_multiplicity(S, a * pts + b)
    assert np.array_equal(rp.counts, rs.counts)
    # radii chosen off the lattice tangency distances, where the count is decided by rounding
    for rho in (0.5, 2.3, 5.3):
        for k in (0.1, 0.5, 1.0):
            assert circle_count(hex_packing, rho, k) == circle_count(S, abs(a) * rho, k, origin=b)


# --- covering -----------------------------------------------------------------------------

def test_tangent_packing_covers_at_most_twice(hex_packing):
    rep = covering_multiplicity(hex_packing, n_samples=20_000, rng=np.random.default_rng(3))
    assert rep.max <= 2 and rep.all_indispensable


def test_sample_carrier_inside_carrier(hex_packing):
    pts = sample_carrier(hex_packing, 2000, np.random.default_rng(5))
    c, r = hex_packing.arrays()
    in_disk = (np.abs(pts[:, None] - c[None, :]) <= r[None, :] + 1e-12).any(axis=1)
    F = hex_packing.T.face_array()
    in_tri = np.zeros(len(pts), bool)
    for f in F:
        in_tri |= _in_triangle(pts, c[f])
    assert np.all(in_disk | in_tri)


# --- cross sections -----------------------------------------------------------------------

def test_cross_section_between_rings(hex_packing):
    T = hex_packing.T
    cs = cross_section_loop(hex_packing, radius=3.7)
    ring2 = set(T.sphere(0, 2))
    assert set(cs.loop.vertices) == ring2
    assert set(cs.vertices) >= ring2
    k = len(cs.loop.vertices)
    assert all(T.is_edge(cs.loop.vertices[i], cs.loop.vertices[(i + 1) % k]) for i in range(k))


def test_cross_section_inside_root(hex_packing):
    cs = cross_section_loop(hex_packing, radius=0.5)
    assert cs.vertices == (0,)


def test_cross_section_through_tangency_is_deterministic(hex_packing):
    # neighbouring circles of the first ring touch at distance sqrt(3) from the centre
    a = cross_section_loop(hex_packing, radius=math.sqrt(3))
    b = cross_section_loop(hex_packing, radius=math.sqrt(3))
    assert a.perturbations >= 1 and a.radius > math.sqrt(3)
    assert a.vertices == b.vertices and a.loop == b.loop


def test_cross_section_outside_carrier(hex_packing):
    with pytest.raises(CircleOutsideCarrier):
        cross_section_loop(hex_packing, radius=100.0)


# --- distortion and counting ------------------------------------------------------------------

def test_distortion_examples():
    T = build_triangulation([0, 1, 2], [(0, 1, 2)])
    circles = {0: Circle(3 + 0j, 1.0), 1: Circle(0.1 + 0j, 1.0), 2: Circle(-3 + 0j, 2.0)}
    P = LaidOutPattern(T, "euclidean", circles, {v: C.center for v, C in circles.items()}, 0)
    rep = distortion(P)
    assert rep.containing_origin == [1]
    assert rep.tau[0] == pytest.approx(0.5) and rep.tau[2] == pytest.approx(2.0)
    circles[0] = Circle(2 + 0j, 1.0)
    assert distortion(P).tau[0] == pytest.approx(1.0)


def test_distortion_decreases_outward(hex_packing):
    rep = distortion(hex_packing)
    vals = [rep.by_ring[k] for k in sorted(rep.by_ring)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    # ring m of the unit packing is a hexagon of lattice points 2m e^{i pi/3 s} + 2j e^{i 2 pi/3 (s+1)};
    # its nearest centre lies at 2 min_j sqrt(m^2 - m j + j^2)
    for k, t in rep.by_ring.items():
        m = k + 1
        d = 2 * min(math.sqrt(m * m - m * j + j * j) for j in range(m + 1))
        assert t == pytest.approx(1 / (d - 1), rel=1e-9)


def test_circle_count(hex_packing):
    assert circle_count(hex_packing, 1.0, 10) == 0
    ks = np.linspace(0.01, 2, 40)
    counts = [circle_count(hex_packing, 3.0, k) for k in ks]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    assert counts[0] > counts[-1]


# --- carrier -------------------------------------------------------------------------------

def test_carrier_single_wheel_indeterminate():
    W = wheel(6)
    P = develop(W, AngleFunction.constant(W, 0.0), np.ones(7))
    assert carrier_info([P]).kind is CarrierKind.INDETERMINATE


def test_carrier_flat_lattice_plane_like():
    pats = []
    for n in range(3, 7):
        T = lattice_ball(6, n)
        pats.append(develop(T, AngleFunction.constant(T, 0.0), np.ones(len(T.vertices))))
    info = carrier_info(pats)
    assert info.kind is CarrierKind.PLANE_LIKE
    # outer radius grows by about one lattice step (2 radii) per level
    assert np.allclose(np.diff(info.outer_radii), 2 * math.sqrt(3) / 2 * 2 / math.sqrt(3), atol=0.3)


# --- serialisation -------------------------------------------------------------------------

def test_json_round_trip(rng):
    T = lattice_ball(6, 2)
    P = solved_pattern(T, random_angles(T, rng))[1]
    Q = LaidOutPattern.from_json(P.to_json())
    assert Q.circles == P.circles and set(Q.T.faces) == set(P.T.faces)
    ra, H = solved_pattern(wheel(6), AngleFunction.constant(wheel(6), 0.0), "horocycle", HYPERBOLIC)
    G = LaidOutPattern.from_json(H.to_json())
    assert G.ideal == H.ideal and G.circles == H.circles


def test_svg_deterministic(hex_packing):
    a = to_svg(hex_packing)
    assert a == to_svg(hex_packing)
    assert a.count("<circle") == len(hex_packing.T.vertices)
    assert a.startswith("<svg") and a.rstrip().endswith("</svg>")
