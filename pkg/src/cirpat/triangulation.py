"""Combinatorial disk triangulations, angle functions and the Z-conditions."""

from __future__ import annotations

import heapq
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import (AngleOutOfRange, BadLink, DisconnectedInput, EmptyBall,
                     NonManifold, NotADisk, VertexNotFound)

Edge = Tuple[int, int]
Face = Tuple[int, int, int]

# Strict inequalities of the Z-conditions are decided with this slack so that
# exact boundary cases (e.g. three angles of pi/3 summing to pi) count as
# equalities despite rounding.
ANGLE_TOL = 1e-12


def edge_key(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


class DiskTriangulation:
    """Finite triangulated disk (or sphere, when ``closed``).

    Faces are stored counterclockwise; ``ring(v)`` lists the neighbors of v
    counterclockwise. For a boundary vertex the ring is a path starting at the
    boundary neighbor that follows v along the oriented boundary.
    """

    def __init__(self, vertices, faces, rings, ring_closed, closed=False):
        self.vertices: Tuple[int, ...] = tuple(vertices)
        self.faces: Tuple[Face, ...] = tuple(faces)
        self._rings: Dict[int, Tuple[int, ...]] = rings
        self.closed = closed
        edges = set()
        self.edge_faces: Dict[Edge, List[int]] = defaultdict(list)
        for fi, (a, b, c) in enumerate(self.faces):
            for e in (edge_key(a, b), edge_key(b, c), edge_key(c, a)):
                edges.add(e)
                self.edge_faces[e].append(fi)
        self.edges: Tuple[Edge, ...] = tuple(sorted(edges))
        self.edge_index = {e: k for k, e in enumerate(self.edges)}
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self.boundary = frozenset(v for v in self.vertices if not ring_closed[v])
        self.interior = tuple(v for v in self.vertices if v not in self.boundary)
        self._face_set = {frozenset(f) for f in self.faces}
        self._adj = {v: frozenset(r) for v, r in rings.items()}

    def ring(self, v: int) -> Tuple[int, ...]:
        return self._rings[v]

    def neighbors(self, v: int) -> frozenset:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._rings[v])

    def is_edge(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def is_face(self, vs: Iterable[int]) -> bool:
        return frozenset(vs) in self._face_set

    @property
    def boundary_edges(self) -> List[Edge]:
        return [e for e in self.edges if len(self.edge_faces[e]) == 1]

    def euler_characteristic(self) -> int:
        return len(self.vertices) - len(self.edges) + len(self.faces)

    def face_array(self) -> np.ndarray:
        """Faces as an (F, 3) array of vertex indices."""
        idx = self.index
        return np.array([[idx[a], idx[b], idx[c]] for a, b, c in self.faces], dtype=np.intp).reshape(-1, 3)

    def distances(self, source) -> Dict[int, int]:
        """Combinatorial (BFS) distance from a vertex or a set of vertices."""
        sources = [source] if isinstance(source, (int, np.integer)) else list(source)
        for s in sources:
            if s not in self.index:
                raise VertexNotFound(f"vertex {s} not in triangulation", witness=s)
        dist = {s: 0 for s in sources}
        queue = deque(sources)
        while queue:
            v = queue.popleft()
            for w in self._rings[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        return dist

    def sphere(self, v0: int, n: int) -> List[int]:
        """Vertices at distance exactly n from v0."""
        return sorted(v for v, d in self.distances(v0).items() if d == n)

    def adjacency(self) -> Dict[int, frozenset]:
        return dict(self._adj)

    def __repr__(self):
        kind = "sphere" if self.closed else "disk"
        return (f"DiskTriangulation({kind}, V={len(self.vertices)}, E={len(self.edges)}, "
                f"F={len(self.faces)}, boundary={len(self.boundary)})")


def _orient_faces(faces: List[Face]) -> List[Face]:
    """Flip faces so that every shared edge appears in opposite directions."""
    by_edge = defaultdict(list)
    for fi, f in enumerate(faces):
        for k in range(3):
            by_edge[edge_key(f[k], f[(k + 1) % 3])].append(fi)
    for e, fs in by_edge.items():
        if len(fs) > 2:
            raise NonManifold(f"edge {e} lies in {len(fs)} faces", witness=e)
    oriented: List[Optional[Face]] = [None] * len(faces)
    oriented[0] = faces[0]
    queue = deque([0])
    while queue:
        fi = queue.popleft()
        f = oriented[fi]
        for k in range(3):
            a, b = f[k], f[(k + 1) % 3]
            for gj in by_edge[edge_key(a, b)]:
                if gj == fi:
                    continue
                g = faces[gj]
                # g must traverse the shared edge as b -> a
                has_ab = any(g[m] == a and g[(m + 1) % 3] == b for m in range(3))
                want = (g[0], g[2], g[1]) if has_ab else g
                if oriented[gj] is None:
                    oriented[gj] = want
                    queue.append(gj)
                elif set(zip(oriented[gj], oriented[gj][1:] + oriented[gj][:1])) != set(zip(want, want[1:] + want[:1])):
                    raise NonManifold("surface is not orientable", witness=g)
    if any(f is None for f in oriented):
        raise DisconnectedInput("faces do not form a connected surface")
    return oriented  # type: ignore[return-value]


def build_triangulation(vertices: Sequence[int], faces: Sequence[Sequence[int]],
                        closed: bool = False) -> DiskTriangulation:
    """Validate faces and assemble a disk (or, with ``closed``, sphere) triangulation.

    Face orientation is made consistent with the first face, which is taken to
    be counterclockwise.
    """
    verts = [int(v) for v in vertices]
    if len(set(verts)) != len(verts):
        raise NonManifold("duplicate vertex ids")
    vset = set(verts)
    flist: List[Face] = []
    seen = set()
    for f in faces:
        if len(f) != 3:
            raise NonManifold(f"face {f} is not a triangle", witness=tuple(f))
        f = tuple(int(v) for v in f)
        if len(set(f)) != 3:
            raise NonManifold(f"face {f} repeats a vertex", witness=f)
        for v in f:
            if v not in vset:
                raise VertexNotFound(f"face {f} references undeclared vertex {v}", witness=v)
        key = frozenset(f)
        if key in seen:
            raise NonManifold(f"two faces share the vertex set {sorted(f)}", witness=f)
        seen.add(key)
        flist.append(f)
    if not flist:
        raise EmptyBall("no faces")
    used = {v for f in flist for v in f}
    if used != vset:
        raise DisconnectedInput("vertices not covered by any face", witness=sorted(vset - used))

    flist = _orient_faces(flist)

    # link of v: directed edges b -> c from faces (v, b, c)
    nxt: Dict[int, Dict[int, int]] = defaultdict(dict)
    for a, b, c in flist:
        for v, x, y in ((a, b, c), (b, c, a), (c, a, b)):
            if x in nxt[v]:
                raise BadLink(f"link of {v} branches at {x}", witness=v)
            nxt[v][x] = y

    rings: Dict[int, Tuple[int, ...]] = {}
    closed_ring: Dict[int, bool] = {}
    for v in verts:
        succ = nxt[v]
        preds = set(succ.values())
        starts = [x for x in succ if x not in preds]
        if len(starts) > 1:
            raise BadLink(f"link of {v} is not connected", witness=v)
        start = starts[0] if starts else min(succ)
        ring = [start]
        x = start
        while x in succ:
            x = succ[x]
            if x == start:
                break
            ring.append(x)
        is_cycle = not starts
        expected = len(succ) if is_cycle else len(succ) + 1
        if len(ring) != expected:
            raise BadLink(f"link of {v} is not a single path or cycle", witness=v)
        if is_cycle and len(ring) < 3:
            raise BadLink(f"link of {v} is a degenerate cycle", witness=v)
        rings[v] = tuple(ring)
        closed_ring[v] = is_cycle

    if closed and not all(closed_ring.values()):
        raise NotADisk("closed surface requested but boundary present")

    T = DiskTriangulation(verts, flist, rings, closed_ring, closed=closed)

    chi = T.euler_characteristic()
    if chi != (2 if closed else 1):
        raise NotADisk(f"Euler characteristic {chi}, expected {2 if closed else 1}")
    return T


def combinatorial_ball(T: DiskTriangulation, v0: int, n: int) -> DiskTriangulation:
    """Subtriangulation induced by the vertices within distance n of v0."""
    if v0 not in T.index:
        raise VertexNotFound(f"vertex {v0} not in triangulation", witness=v0)
    if n < 1:
        raise EmptyBall("a ball of radius < 1 contains no face")
    dist = T.distances(v0)
    faces = [f for f in T.faces if all(dist.get(v, n + 1) <= n for v in f)]
    if not faces:
        raise EmptyBall(f"ball of radius {n} about {v0} contains no face")
    verts = sorted({v for f in faces for v in f})
    return build_triangulation(verts, faces)


# --- angle functions --------------------------------------------------------

class AngleFunction:
    """Intersection angles on the edges of a triangulation.

    ``epsilon`` is the margin with every angle <= pi - epsilon. When omitted
    it defaults to min(pi/2, pi - max angle).
    """

    def __init__(self, theta: Mapping[Edge, float], epsilon: Optional[float] = None):
        self.theta: Dict[Edge, float] = {edge_key(*e): float(t) for e, t in theta.items()}
        if epsilon is None:
            top = max(self.theta.values(), default=0.0)
            epsilon = min(math.pi / 2, math.pi - top)
        self.epsilon = float(epsilon)

    @classmethod
    def constant(cls, T: DiskTriangulation, value: float = 0.0, epsilon: Optional[float] = None):
        return cls({e: value for e in T.edges}, epsilon)

    @classmethod
    def from_json(cls, angles: Mapping[str, float], epsilon: Optional[float] = None):
        theta = {}
        for key, t in angles.items():
            a, b = key.split("-")
            theta[edge_key(int(a), int(b))] = t
        return cls(theta, epsilon)

    def to_json(self) -> Dict[str, float]:
        return {f"{i}-{j}": self.theta[(i, j)] for i, j in sorted(self.theta)}

    def __call__(self, i: int, j: int) -> float:
        return self.theta[edge_key(i, j)]

    def __getitem__(self, e: Edge) -> float:
        return self.theta[edge_key(*e)]

    def array(self, T: DiskTriangulation) -> np.ndarray:
        return np.array([self.theta[e] for e in T.edges], dtype=float)

    def face_angles(self, T: DiskTriangulation) -> np.ndarray:
        """(F, 3) array; column a holds the angle on the edge opposite corner a."""
        out = np.empty((len(T.faces), 3))
        for fi, (a, b, c) in enumerate(T.faces):
            out[fi] = (self(b, c), self(c, a), self(a, b))
        return out

    def validate(self, T: DiskTriangulation) -> None:
        if not self.epsilon > 0:
            raise AngleOutOfRange(f"epsilon must be positive, got {self.epsilon}")
        for e in T.edges:
            if e not in self.theta:
                raise AngleOutOfRange(f"no angle on edge {e}", witness=e)
            t = self.theta[e]
            if not (0.0 <= t <= math.pi - self.epsilon + ANGLE_TOL):
                raise AngleOutOfRange(f"angle {t} on edge {e} outside [0, pi - epsilon]", witness=e)


# --- loops -------------------------------------------------------------------

@dataclass(frozen=True)
class Loop:
    vertices: Tuple[int, ...]
    is_face: bool

    def __len__(self):
        return len(self.vertices)

    def edges(self) -> List[Edge]:
        vs = self.vertices
        return [edge_key(vs[k], vs[(k + 1) % len(vs)]) for k in range(len(vs))]


def _bounded_cycles(T: DiskTriangulation, max_len: int, weight=None, budget=math.inf):
    """Yield each simple cycle of length <= max_len once, as a vertex tuple.

    A cycle is reported from its smallest vertex, in the direction whose second
    vertex is smaller than its last. With ``weight`` (edge -> cost >= 0) only
    cycles of total cost <= budget are produced, pruning with Dijkstra bounds.
    """
    order = sorted(T.vertices)
    rank = {v: k for k, v in enumerate(order)}
    adj = {v: sorted(T.neighbors(v), key=rank.__getitem__) for v in order}
    for s in order:
        rs = rank[s]
        # lower bounds to return to s within the allowed vertex set
        if weight is None:
            bound = {s: 0}
            queue = deque([s])
            while queue:
                v = queue.popleft()
                if bound[v] >= max_len:
                    continue
                for w in adj[v]:
                    if rank[w] > rs and w not in bound:
                        bound[w] = bound[v] + 1
                        queue.append(w)
        else:
            bound = {s: 0.0}
            heap = [(0.0, s)]
            while heap:
                d, v = heapq.heappop(heap)
                if d > bound.get(v, math.inf) or d > budget:
                    continue
                for w in adj[v]:
                    if rank[w] > rs:
                        nd = d + weight[edge_key(v, w)]
                        if nd < bound.get(w, math.inf) and nd <= budget:
                            bound[w] = nd
                            heapq.heappush(heap, (nd, w))
        path = [s]
        on_path = {s}

        def extend(v, length, cost):
            for w in adj[v]:
                if rank[w] < rs:
                    continue
                step = 0.0 if weight is None else weight[edge_key(v, w)]
                if w == s:
                    if length >= 3 and rank[path[1]] < rank[path[-1]] and cost + step <= budget:
                        yield tuple(path)
                    continue
                if w in on_path or w not in bound or length + 1 > max_len:
                    continue
                if weight is None:
                    if length + bound[w] > max_len:
                        continue
                elif cost + step + bound[w] > budget:
                    continue
                path.append(w)
                on_path.add(w)
                yield from extend(w, length + 1, cost + step)
                path.pop()
                on_path.discard(w)

        yield from extend(s, 1, 0.0)


def enumerate_simple_loops(T: DiskTriangulation, max_len: int) -> List[Loop]:
    """All simple closed edge cycles with at most ``max_len`` edges."""
    if max_len < 3:
        raise ValueError("max_len must be at least 3")
    loops = [Loop(c, len(c) == 3 and T.is_face(c)) for c in _bounded_cycles(T, max_len)]
    loops.sort(key=lambda lp: (len(lp.vertices), lp.vertices))
    return loops


# --- Z-conditions ------------------------------------------------------------

def face_z1_holds(a: float, b: float, c: float) -> bool:
    """Pairwise sums below pi plus the third whenever the face sum exceeds pi."""
    if a + b + c <= math.pi + ANGLE_TOL:
        return True
    return (a + b < math.pi + c - ANGLE_TOL and b + c < math.pi + a - ANGLE_TOL
            and c + a < math.pi + b - ANGLE_TOL)


def face_z4_holds(a: float, b: float, c: float) -> bool:
    ca, cb, cc = math.cos(a), math.cos(b), math.cos(c)
    return min(ca + cb * cc, cb + cc * ca, cc + ca * cb) >= -ANGLE_TOL


@dataclass
class ConditionReport:
    status: Dict[str, bool]
    witnesses: Dict[str, list]
    z2_search_depth: int
    checked: Tuple[str, ...] = ("Z1", "Z2", "Z3", "Z4")

    @property
    def passed(self) -> bool:
        return all(self.status[c] for c in self.checked)

    def failed(self) -> List[str]:
        return [c for c in self.checked if not self.status[c]]

    def to_json(self) -> dict:
        return {
            "status": {c: ("pass" if self.status[c] else "fail") for c in self.checked},
            "witnesses": {c: [list(w) for w in self.witnesses[c]] for c in self.checked},
            "z2_search_depth": self.z2_search_depth,
        }


def z2_violations(T: DiskTriangulation, theta: AngleFunction, max_len: int) -> List[Tuple[int, ...]]:
    """Non-face simple loops of length <= max_len with angle sum >= (s - 2) pi.

    Writing the condition as sum(pi - theta) > 2 pi turns it into a bounded
    minimum-weight cycle search with positive edge weights.
    """
    weight = {e: math.pi - theta[e] for e in T.edges}
    out = []
    for c in _bounded_cycles(T, max_len, weight, budget=2 * math.pi + 1e-9):
        if len(c) == 3 and T.is_face(c):
            continue
        s = sum(theta(c[k], c[(k + 1) % len(c)]) for k in range(len(c)))
        if s >= (len(c) - 2) * math.pi - ANGLE_TOL:
            out.append(c)
    out.sort(key=lambda c: (len(c), c))
    return out


def z3_violations(T: DiskTriangulation, theta: AngleFunction) -> List[Tuple[int, int, int]]:
    out = []
    for j in sorted(T.vertices):
        nb = sorted(T.neighbors(j))
        for x in range(len(nb)):
            for y in range(x + 1, len(nb)):
                i, k = nb[x], nb[y]
                if T.is_edge(i, k):
                    continue
                if theta(i, j) + theta(j, k) >= math.pi - ANGLE_TOL:
                    out.append((i, j, k))
    return out


def check_conditions(T: DiskTriangulation, theta: AngleFunction, z2_max_len: int = 8) -> ConditionReport:
    theta.validate(T)
    depth = max(int(z2_max_len), 4)
    w: Dict[str, list] = {"Z1": [], "Z2": [], "Z3": [], "Z4": []}
    for f in sorted(T.faces, key=sorted):
        a, b, c = f
        angs = (theta(b, c), theta(c, a), theta(a, b))
        if not face_z1_holds(*angs):
            w["Z1"].append(tuple(sorted(f)))
        if not face_z4_holds(*angs):
            w["Z4"].append(tuple(sorted(f)))
    w["Z2"] = z2_violations(T, theta, depth)
    w["Z3"] = z3_violations(T, theta)
    status = {c: not w[c] for c in w}
    return ConditionReport(status, w, depth)


# --- sphere closure ----------------------------------------------------------

def close_to_sphere(T: DiskTriangulation, theta: AngleFunction):
    """Cone the boundary to a new vertex; cone edges get angle 0."""
    if not T.boundary:
        raise NotADisk("triangulation has no boundary to close")
    v_inf = max(T.vertices) + 1
    faces = list(T.faces)
    for a, b, c in T.faces:
        for x, y in ((a, b), (b, c), (c, a)):
            if len(T.edge_faces[edge_key(x, y)]) == 1:
                faces.append((y, x, v_inf))
    S = build_triangulation(list(T.vertices) + [v_inf], faces, closed=True)
    ext = dict(theta.theta)
    for v in T.boundary:
        ext[edge_key(v, v_inf)] = 0.0
    return S, AngleFunction(ext, theta.epsilon)
