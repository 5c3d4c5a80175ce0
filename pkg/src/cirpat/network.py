"""Vertex extremal length, effective resistance and the type problem on graphs."""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import nnls

from .errors import NoConvergence, NoPath, SeparationViolated, SingularSystem
from .triangulation import DiskTriangulation, edge_key

ADMISSIBLE_TOL = 1e-9
ANNULUS_CONSTANT = 24 + 36 * math.pi ** 2


# --- graphs ---------------------------------------------------------------------

class WeightedGraph:
    """Undirected graph with nonnegative edge weights (default 1)."""

    def __init__(self, vertices: Iterable[Hashable], edges: Iterable[Tuple[Hashable, Hashable]],
                 weights: Optional[Mapping] = None):
        self.vertices = list(dict.fromkeys(vertices))
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self.adj: Dict[Hashable, Dict[Hashable, float]] = {v: {} for v in self.vertices}
        for u, v in edges:
            if u == v:
                continue
            w = 1.0
            if weights is not None:
                w = weights.get((u, v), weights.get((v, u), 1.0))
            if not (w >= 0 and math.isfinite(w)):
                raise ValueError(f"edge weight on {(u, v)} must be finite and nonnegative")
            self.adj[u][v] = float(w)
            self.adj[v][u] = float(w)

    @property
    def edges(self) -> List[Tuple[Hashable, Hashable]]:
        return [(u, v) for u in self.vertices for v in self.adj[u] if self.index[u] < self.index[v]]

    def __len__(self):
        return len(self.vertices)

    def neighbors(self, v):
        return self.adj[v].keys()

    def degree_weight(self, v) -> float:
        return sum(self.adj[v].values())

    def components(self) -> List[Set]:
        seen, out = set(), []
        for s in self.vertices:
            if s in seen:
                continue
            comp, stack = {s}, [s]
            while stack:
                x = stack.pop()
                for y in self.adj[x]:
                    if y not in comp:
                        comp.add(y)
                        stack.append(y)
            seen |= comp
            out.append(comp)
        return out

    def with_edges(self, extra: Iterable[Tuple[Hashable, Hashable]]) -> "WeightedGraph":
        w = {(u, v): self.adj[u][v] for u, v in self.edges}
        return WeightedGraph(self.vertices, list(self.edges) + list(extra), w)

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(self.vertices)
        G.add_weighted_edges_from((u, v, self.adj[u][v]) for u, v in self.edges)
        return G

    # constructors
    @classmethod
    def from_triangulation(cls, T: DiskTriangulation, weights: Optional[Mapping] = None):
        return cls(T.vertices, T.edges, weights)

    @classmethod
    def from_networkx(cls, G: nx.Graph, weight: str = "weight"):
        return cls(G.nodes, G.edges, {(u, v): d.get(weight, 1.0) for u, v, d in G.edges(data=True)})

    @classmethod
    def path(cls, k: int):
        return cls(range(k), [(i, i + 1) for i in range(k - 1)])

    @classmethod
    def grid(cls, m: int, n: Optional[int] = None):
        n = m if n is None else n
        verts = [(i, j) for i in range(m) for j in range(n)]
        edges = [((i, j), (i + 1, j)) for i in range(m - 1) for j in range(n)]
        edges += [((i, j), (i, j + 1)) for i in range(m) for j in range(n - 1)]
        return cls(verts, edges)

    @classmethod
    def complete(cls, k: int):
        return cls(range(k), [(i, j) for i in range(k) for j in range(i + 1, k)])


def as_graph(G) -> WeightedGraph:
    if isinstance(G, WeightedGraph):
        return G
    if isinstance(G, DiskTriangulation):
        return WeightedGraph.from_triangulation(G)
    if isinstance(G, nx.Graph):
        return WeightedGraph.from_networkx(G)
    raise TypeError(f"cannot interpret {type(G).__name__} as a graph")


# --- results ----------------------------------------------------------------------

class Infinite:
    """Extremal length of an empty family; compares above every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Infinite"

    def __float__(self):
        return math.inf

    def __gt__(self, other):
        return not isinstance(other, Infinite)

    def __ge__(self, other):
        return True

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return isinstance(other, Infinite)


INFINITE = Infinite()


@dataclass
class VELResult:
    mod: float
    metric: Dict[Hashable, float]
    certificate: List[Tuple[Hashable, ...]] = field(default_factory=list)
    method: str = "paths"
    iterations: int = 0

    @property
    def vel(self):
        return INFINITE if self.mod == 0 else 1.0 / self.mod

    @property
    def is_infinite(self) -> bool:
        return self.mod == 0

    def to_json(self) -> dict:
        return {"mod": self.mod, "vel": None if self.is_infinite else self.vel, "method": self.method,
                "iterations": self.iterations}


# --- quadratic programs -------------------------------------------------------------

def least_distance(G: np.ndarray) -> np.ndarray:
    """min ||x||^2 subject to G x >= 1, through the NNLS dual.

    With E = [G^T; 1^T] and f = e_{n+1}, the NNLS residual r = E u - f gives
    x = -r[:n] / r[n]; a zero residual means the constraints are infeasible.
    """
    m, n = G.shape
    E = np.vstack([G.T, np.ones((1, m))])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, _ = nnls(E, f, maxiter=50 * (n + m + 1))
    r = E @ u - f
    if abs(r[n]) < 1e-14:
        raise SingularSystem("least-distance constraints are infeasible")
    return -r[:n] / r[n]


def _vertex_dijkstra(graph: WeightedGraph, nu: np.ndarray, sources: Sequence, allowed=None):
    dist = {}
    prev = {}
    heap = []
    idx = graph.index
    for s in sources:
        d = nu[idx[s]]
        if d < dist.get(s, math.inf):
            dist[s] = d
            prev[s] = None
            heapq.heappush(heap, (d, idx[s], s))
    done = set()
    while heap:
        d, _, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y in graph.adj[x]:
            if allowed is not None and y not in allowed:
                continue
            nd = d + nu[idx[y]]
            if nd < dist.get(y, math.inf) - 1e-15:
                dist[y] = nd
                prev[y] = x
                heapq.heappush(heap, (nd, idx[y], y))
    return dist, prev


def _check_terminals(graph, V1, V2):
    V1, V2 = list(dict.fromkeys(V1)), list(dict.fromkeys(V2))
    if not V1 or not V2:
        raise ValueError("terminal sets must be nonempty")
    for v in V1 + V2:
        if v not in graph.index:
            raise ValueError(f"unknown vertex {v!r}")
    return V1, V2


def vel(G, V1, V2, strict: bool = False, batch: int = 64, max_iter: int = 10_000,
        method: str = "auto") -> VELResult:
    """Vertex extremal length of the family of paths joining V1 and V2.

    ``method="paths"`` uses constraint generation: the vertex-weighted shortest
    path is the separation oracle and each restricted program is solved
    exactly. ``method="flow"`` solves the dual minimum-throughput flow problem
    instead (better for large graphs). ``"auto"`` picks by size.
    """
    graph = as_graph(G)
    V1, V2 = _check_terminals(graph, V1, V2)
    n = len(graph)
    comp = _component_of(graph, V1)
    if not comp & set(V2):
        if strict:
            raise NoPath("the terminal sets are not connected", witness=(tuple(V1), tuple(V2)))
        return VELResult(0.0, {v: 0.0 for v in graph.vertices}, method="disconnected")
    if method == "auto":
        method = "paths" if n <= 300 else "flow"
    if method == "flow":
        return vel_flow(graph, V1, V2)
    if method != "paths":
        raise ValueError(f"unknown method {method!r}")

    V2set = set(V2)
    nu = np.zeros(n)
    rows: List[np.ndarray] = []
    seen: Set[Tuple] = set()
    paths: List[Tuple] = []
    for it in range(1, max_iter + 1):
        dist, prev = _vertex_dijkstra(graph, nu, V1)
        hits = sorted((dist[t], graph.index[t], t) for t in V2set if t in dist)
        if hits[0][0] >= 1 - ADMISSIBLE_TOL:
            break
        added = 0
        for d, _, t in hits:
            if d >= 1 - ADMISSIBLE_TOL or added >= batch:
                break
            path = [t]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            key = tuple(sorted(graph.index[v] for v in path))
            if key in seen:
                continue
            seen.add(key)
            row = np.zeros(n)
            row[list(key)] = 1.0
            rows.append(row)
            paths.append(tuple(reversed(path)))
            added += 1
        if added == 0:
            raise NoConvergence("path oracle returned only known constraints")
        nu = least_distance(np.array(rows))
        nu = np.maximum(nu, 0.0)
    else:
        raise NoConvergence(f"constraint generation did not settle in {max_iter} rounds")
    mod = float(nu @ nu)
    binding = [p for p, row in zip(paths, rows) if row @ nu <= 1 + 1e-9]
    return VELResult(mod, dict(zip(graph.vertices, nu.tolist())), binding, "paths", it)


def _component_of(graph, V1):
    comp, stack = set(V1), list(V1)
    while stack:
        x = stack.pop()
        for y in graph.adj[x]:
            if y not in comp:
                comp.add(y)
                stack.append(y)
    return comp


def vel_flow(G, V1, V2, solver: Optional[str] = None) -> VELResult:
    """VEL as the least total squared throughput of a unit flow from V1 to V2.

    This is the Lagrange dual of the modulus program: a unit flow with
    throughput T_v at each vertex gives VEL = min sum T_v^2, and the extremal
    metric is nu = T / sum T^2.
    """
    import cvxpy as cp

    graph = as_graph(G)
    V1, V2 = _check_terminals(graph, V1, V2)
    n = len(graph)
    idx = graph.index
    arcs = [(idx[u], idx[v]) for u, v in graph.edges] + [(idx[v], idx[u]) for u, v in graph.edges]
    m = len(arcs)
    tail = np.array([a for a, _ in arcs], int)
    head = np.array([b for _, b in arcs], int)
    In = sp.csr_matrix((np.ones(m), (head, np.arange(m))), shape=(n, m))
    Out = sp.csr_matrix((np.ones(m), (tail, np.arange(m))), shape=(n, m))
    S = sp.csr_matrix((np.ones(len(V1)), ([idx[v] for v in V1], np.arange(len(V1)))), shape=(n, len(V1)))
    Q = sp.csr_matrix((np.ones(len(V2)), ([idx[v] for v in V2], np.arange(len(V2)))), shape=(n, len(V2)))
    f = cp.Variable(m, nonneg=True)
    s = cp.Variable(len(V1), nonneg=True)
    t = cp.Variable(len(V2), nonneg=True)
    through = In @ f + S @ s
    cons = [through == Out @ f + Q @ t, cp.sum(s) == 1]
    prob = cp.Problem(cp.Minimize(cp.sum_squares(through)), cons)
    solver = solver or ("CLARABEL" if "CLARABEL" in cp.installed_solvers() else None)
    prob.solve(solver=solver)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise NoConvergence(f"flow program ended with status {prob.status}")
    T = np.maximum(np.asarray(In @ f.value + S @ s.value).ravel(), 0.0)
    total = float(T @ T)
    nu = T / total
    return VELResult(1.0 / total, dict(zip(graph.vertices, nu.tolist())), [], "flow", 1)


# --- separators ------------------------------------------------------------------------

def _split_network(graph: WeightedGraph, V1, V2) -> nx.DiGraph:
    D = nx.DiGraph()
    for v in graph.vertices:
        D.add_edge(("in", v), ("out", v), capacity=0.0)
    for u, v in graph.edges:
        D.add_edge(("out", u), ("in", v))
        D.add_edge(("out", v), ("in", u))
    for v in V1:
        D.add_edge("source", ("in", v))
    for v in V2:
        D.add_edge(("out", v), "sink")
    return D


def min_vertex_cut(graph: WeightedGraph, nu: Mapping, V1, V2) -> Tuple[float, Tuple]:
    """Lightest vertex set (terminals allowed) meeting every path from V1 to V2."""
    D = _split_network(graph, V1, V2)
    for v in graph.vertices:
        D[("in", v)][("out", v)]["capacity"] = float(nu[v])
    value, (reach, _) = nx.minimum_cut(D, "source", "sink")
    cut = tuple(v for v in graph.vertices if ("in", v) in reach and ("out", v) not in reach)
    return float(value), cut


def vel_separators(G, V1, V2, max_iter: int = 10_000) -> VELResult:
    """VEL of the family of vertex sets separating V1 from V2, by cut generation."""
    graph = as_graph(G)
    V1, V2 = _check_terminals(graph, V1, V2)
    n = len(graph)
    idx = graph.index
    cuts: List[Tuple] = [tuple(V1), tuple(V2)] if set(V1) != set(V2) else [tuple(V1)]
    rows = []
    for c in cuts:
        row = np.zeros(n)
        row[[idx[v] for v in c]] = 1.0
        rows.append(row)
    seen = {tuple(sorted(idx[v] for v in c)) for c in cuts}
    for it in range(1, max_iter + 1):
        nu = np.maximum(least_distance(np.array(rows)), 0.0)
        value, cut = min_vertex_cut(graph, dict(zip(graph.vertices, nu)), V1, V2)
        if value >= 1 - ADMISSIBLE_TOL:
            break
        key = tuple(sorted(idx[v] for v in cut))
        if key in seen:
            raise NoConvergence("cut oracle returned a known constraint")
        seen.add(key)
        row = np.zeros(n)
        row[list(key)] = 1.0
        rows.append(row)
        cuts.append(cut)
    else:
        raise NoConvergence(f"cut generation did not settle in {max_iter} rounds")
    mod = float(nu @ nu)
    binding = [c for c, row in zip(cuts, rows) if row @ nu <= 1 + 1e-9]
    return VELResult(mod, dict(zip(graph.vertices, nu.tolist())), binding, "cuts", it)


@dataclass
class DualityReport:
    vel_paths: float
    vel_separators: float
    product: float
    holds: bool


def vel_dual(G, V1, V2, tol: float = 1e-6) -> DualityReport:
    """VEL of the path family and of its separators; their product should be 1."""
    a = vel(G, V1, V2, strict=True, method="paths")
    b = vel_separators(G, V1, V2)
    prod = float(a.vel) * float(b.vel)
    return DualityReport(float(a.vel), float(b.vel), prod, abs(prod - 1) <= tol)


# --- resistance ---------------------------------------------------------------------------

def _laplacian(graph: WeightedGraph) -> sp.csr_matrix:
    idx = graph.index
    rows, cols, vals = [], [], []
    for u, v in graph.edges:
        w = graph.adj[u][v]
        i, j = idx[u], idx[v]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    n = len(graph)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def effective_resistance(G, V1, V2) -> float:
    """Resistance between V1 (held at 0) and V2 (held at 1)."""
    graph = as_graph(G)
    V1, V2 = _check_terminals(graph, V1, V2)
    if set(V1) & set(V2):
        return 0.0
    comp = _component_of(graph, V1)
    if not comp & set(V2):
        raise SingularSystem("no conducting path between the terminal sets")
    keep = [v for v in graph.vertices if v in comp]
    sub = WeightedGraph(keep, [(u, v) for u, v in graph.edges if u in comp],
                        {(u, v): graph.adj[u][v] for u, v in graph.edges if u in comp})
    L = _laplacian(sub).tocsc()
    idx = sub.index
    fixed = np.zeros(len(sub), bool)
    phi = np.zeros(len(sub))
    for v in V1:
        fixed[idx[v]] = True
    for v in V2:
        if v in idx:
            fixed[idx[v]] = True
            phi[idx[v]] = 1.0
    free = np.flatnonzero(~fixed)
    if len(free):
        A = L[free][:, free]
        rhs = -(L[free][:, np.flatnonzero(fixed)] @ phi[fixed])
        try:
            phi[free] = spla.spsolve(A.tocsc(), rhs)
        except RuntimeError as exc:
            raise SingularSystem(str(exc)) from exc
        if not np.all(np.isfinite(phi)):
            raise SingularSystem("Laplacian system is singular")
    current = float(sum((L @ phi)[idx[v]] for v in V2 if v in idx))
    if current <= 0:
        raise SingularSystem("no current flows between the terminal sets")
    return 1.0 / current


@dataclass
class InequalityCheck:
    holds: bool
    lhs: float
    rhs: float
    slack: float
    constant: float


def vel_res_inequality(G, V1, V2) -> InequalityCheck:
    """VEL <= 2 C RES with C the largest weighted degree."""
    graph = as_graph(G)
    C = max(graph.degree_weight(v) for v in graph.vertices)
    v = float(vel(graph, V1, V2, strict=True).vel)
    r = effective_resistance(graph, V1, V2)
    rhs = 2 * C * r
    return InequalityCheck(v <= rhs * (1 + 1e-9), v, rhs, rhs - v, C)


# --- separation and the serial rule ---------------------------------------------------------

def separates(G, S, A, B) -> bool:
    """True when every path from A to B meets S."""
    graph = as_graph(G)
    S = set(S)
    start = [a for a in A if a not in S]
    targets = set(B) - S
    seen, stack = set(start), list(start)
    while stack:
        x = stack.pop()
        if x in targets:
            return False
        for y in graph.adj[x]:
            if y not in S and y not in seen:
                seen.add(y)
                stack.append(y)
    return True


@dataclass
class SerialCheck:
    holds: bool
    total: float
    parts: List[float]


def serial_rule_check(G, sets: Sequence[Sequence]) -> SerialCheck:
    """VEL(V_1, V_2m) >= sum_k VEL(V_{2k-1}, V_2k) for nested separating sets."""
    graph = as_graph(G)
    if len(sets) < 2 or len(sets) % 2:
        raise ValueError("need an even number (>= 2) of sets")
    flat = [set(s) for s in sets]
    for a in range(len(flat)):
        for b in range(a + 1, len(flat)):
            if flat[a] & flat[b]:
                raise SeparationViolated("sets are not disjoint", witness=(a, b))
    for i1 in range(len(flat)):
        for i2 in range(i1 + 1, len(flat)):
            for i3 in range(i2 + 1, len(flat)):
                if not separates(graph, flat[i2], flat[i1], flat[i3]):
                    raise SeparationViolated(f"set {i2} does not separate {i1} from {i3}", witness=(i1, i2, i3))
    total = float(vel(graph, sets[0], sets[-1], strict=True).vel)
    parts = [float(vel(graph, sets[2 * k], sets[2 * k + 1], strict=True).vel) for k in range(len(sets) // 2)]
    return SerialCheck(total >= sum(parts) * (1 - 1e-8), total, parts)


# --- harmonic functions ------------------------------------------------------------------------

@dataclass
class HarmonicResult:
    values: Dict[Hashable, float]
    max_principle: bool


def harmonic_extend(G, boundary_values: Mapping[Hashable, float]) -> HarmonicResult:
    """Solve the weighted Laplace equation off the prescribed vertices."""
    graph = as_graph(G)
    if not boundary_values:
        raise ValueError("boundary values must be nonempty")
    L = _laplacian(graph).tocsc()
    idx = graph.index
    fixed = np.zeros(len(graph), bool)
    f = np.zeros(len(graph))
    for v, x in boundary_values.items():
        fixed[idx[v]] = True
        f[idx[v]] = float(x)
    free = np.flatnonzero(~fixed)
    if len(free):
        A = L[free][:, free]
        rhs = -(L[free][:, np.flatnonzero(fixed)] @ f[fixed])
        # a singular system shows up as non-finite values below and is reported there
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", spla.MatrixRankWarning)
            try:
                f[free] = spla.spsolve(A.tocsc(), rhs)
            except RuntimeError as exc:
                raise SingularSystem(str(exc)) from exc
        if not np.all(np.isfinite(f)):
            raise SingularSystem("some interior vertices are not connected to the boundary")
    lo, hi = min(boundary_values.values()), max(boundary_values.values())
    tol = 1e-10 * max(1.0, abs(lo), abs(hi))
    ok = bool(np.all(f[free] <= hi + tol) and np.all(f[free] >= lo - tol)) if len(free) else True
    return HarmonicResult(dict(zip(graph.vertices, f.tolist())), ok)


# --- annulus bound -----------------------------------------------------------------------------

def crossing_set(pattern, radius: float, origin: complex = 0j) -> List[int]:
    """Vertices whose closed disks meet the circle |z - origin| = radius."""
    out = []
    for v, C in pattern.circles.items():
        d = abs(C.center - origin)
        if max(d - C.radius, 0.0) <= radius <= d + C.radius:
            out.append(v)
    return out


@dataclass
class AnnulusCheck:
    r1: float
    r2: float
    vel: float
    bound: float
    holds: bool


def annulus_bound(pattern, r1: float, r2: float, origin: complex = 0j) -> AnnulusCheck:
    """VEL between the disks crossing C(r1) and C(r2) versus (r2-r1)^2 / ((24+36 pi^2) r2^2)."""
    if not 0 < r1 < r2:
        raise ValueError("need 0 < r1 < r2")
    A = crossing_set(pattern, r1, origin)
    B = crossing_set(pattern, r2, origin)
    if not A or not B:
        raise ValueError("a circle misses every disk")
    res = vel(WeightedGraph.from_triangulation(pattern.T), A, B)
    bound = (r2 - r1) ** 2 / (ANNULUS_CONSTANT * r2 * r2)
    v = float(res.vel)
    return AnnulusCheck(r1, r2, v, bound, v >= bound)


# --- type classification ------------------------------------------------------------------------

@dataclass
class TypeReport:
    verdict: str                     # "Parabolic", "Hyperbolic" or "Inconclusive"
    sequence: Dict[int, float]       # n -> VEL(B(v0, 1), S(v0, n))
    depth_reached: int
    evidence: str
    heuristic: bool = True
    annulus: List[AnnulusCheck] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "sequence": {str(k): v for k, v in self.sequence.items()},
                "depth_reached": self.depth_reached, "evidence": self.evidence, "heuristic": self.heuristic,
                "annulus": [a.__dict__ for a in self.annulus]}


def classify_type(generator: Callable[[int], DiskTriangulation], depth: int, v0: int = 0,
                  delta: float = 0.05, schedule: str = "log", cauchy_tol: float = 1e-3,
                  window: int = 3, max_vertices: int = 60_000, stop_early: bool = True,
                  patterns: Sequence = (), annuli: Sequence[Tuple[float, float]] = ()) -> TypeReport:
    """Heuristic VEL-type from the growth of VEL(B(v0, 1), S(v0, n)).

    Parabolic evidence: each of the last ``window`` increments is at least
    ``delta * log(n / (n - 1))`` (``schedule="log"``; a divergent sequence of
    logarithmic growth passes) or at least ``delta`` (``schedule="constant"``).
    Hyperbolic evidence: the last ``window`` increments are below ``cauchy_tol``.
    With ``stop_early`` the sweep ends as soon as the Cauchy test passes.
    """
    if schedule not in ("log", "constant"):
        raise ValueError("schedule must be 'log' or 'constant'")
    seq: Dict[int, float] = {}
    reached = 1
    for n in range(2, depth + 1):
        T = generator(n)
        if len(T.vertices) > max_vertices:
            break
        inner = [v0] + sorted(T.neighbors(v0))
        outer = T.sphere(v0, n)
        seq[n] = float(vel(WeightedGraph.from_triangulation(T), inner, outer).vel)
        reached = n
        if stop_early and _cauchy(seq, window, cauchy_tol):
            break
    verdict, evidence = "Inconclusive", "too few levels"
    if len(seq) > window:
        keys = sorted(seq)
        inc = [(n, seq[n] - seq[p]) for p, n in zip(keys[-window - 1:], keys[-window:])]
        if _cauchy(seq, window, cauchy_tol):
            verdict = "Hyperbolic"
            evidence = f"last {window} increments below {cauchy_tol}: " + ", ".join(f"{d:.2e}" for _, d in inc)
        elif all(d >= _threshold(n, delta, schedule) for n, d in inc):
            verdict = "Parabolic"
            evidence = (f"last {window} increments exceed the {schedule} schedule (delta={delta}): "
                        + ", ".join(f"{d:.3e}" for _, d in inc))
        else:
            evidence = "increments neither settle nor keep growing: " + ", ".join(f"{d:.3e}" for _, d in inc)
    checks = [annulus_bound(P, a, b) for P in patterns for a, b in annuli]
    return TypeReport(verdict, seq, reached, evidence, True, checks)


def _threshold(n: int, delta: float, schedule: str) -> float:
    return delta * math.log(n / (n - 1)) if schedule == "log" else delta


def _cauchy(seq: Dict[int, float], window: int, tol: float) -> bool:
    if len(seq) <= window:
        return False
    keys = sorted(seq)[-window - 1:]
    return all(abs(seq[b] - seq[a]) < tol for a, b in zip(keys, keys[1:]))
