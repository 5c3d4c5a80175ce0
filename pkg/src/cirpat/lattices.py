"""Built-in triangulations: wheels and balls of degree-regular lattices."""

from __future__ import annotations

from typing import Callable, List, Tuple

from .triangulation import DiskTriangulation, build_triangulation


def wheel(k: int) -> DiskTriangulation:
    """Center 0 surrounded by a k-cycle 1..k."""
    if k < 3:
        raise ValueError("a wheel needs at least 3 spokes")
    faces = [(0, i, i % k + 1) for i in range(1, k + 1)]
    return build_triangulation(range(k + 1), faces)


def _grow(degree: int, levels: int) -> Tuple[List[int], List[Tuple[int, int, int]]]:
    # Each layer gives every boundary vertex b exactly degree - deg(b) new
    # neighbors; consecutive boundary vertices share one of them.
    nbrs = {0: set(range(1, degree + 1))}
    faces = []

    def add(a, b, c):
        faces.append((a, b, c))
        for x, y in ((a, b), (b, c), (c, a)):
            nbrs.setdefault(x, set()).add(y)
            nbrs.setdefault(y, set()).add(x)

    for i in range(1, degree + 1):
        add(0, i, i % degree + 1)
    cycle = list(range(1, degree + 1))
    next_id = degree + 1
    for _ in range(levels - 1):
        first = next_id
        next_id += 1
        prev_last = first
        new_cycle = []
        missing = [degree - len(nbrs[b]) for b in cycle]
        for idx, b in enumerate(cycle):
            m = missing[idx]
            if m < 2:
                raise ValueError(f"degree {degree} too small for layered growth")
            ws = [prev_last] + list(range(next_id, next_id + m - 2))
            next_id += m - 2
            if idx == len(cycle) - 1:
                last = first
            else:
                last = next_id
                next_id += 1
            ws.append(last)
            for a, c in zip(ws, ws[1:]):
                add(b, a, c)
            add(b, last, cycle[(idx + 1) % len(cycle)])
            new_cycle.extend(ws[:-1])
            prev_last = last
        cycle = new_cycle
    return sorted(nbrs), faces


def lattice_ball(degree: int, n: int) -> DiskTriangulation:
    """Ball of radius n about vertex 0 in the triangulation with all degrees equal.

    degree 6 gives the flat triangular lattice, degree 7 the hyperbolic {3,7}
    tiling. Ring k (distance k from 0) is added as the k-th layer.
    """
    if n < 1:
        raise ValueError("radius must be at least 1")
    verts, faces = _grow(degree, n)
    return build_triangulation(verts, faces)


def lattice_generator(degree: int) -> Callable[[int], DiskTriangulation]:
    """Callback producing the ball B(0, n) for each requested n."""
    cache = {}

    def gen(n: int) -> DiskTriangulation:
        if n not in cache:
            cache[n] = lattice_ball(degree, n)
        return cache[n]

    return gen
