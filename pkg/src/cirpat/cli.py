"""Command-line front end: ``cirpat {check,solve,classify,render,mesh,regressions}``.

Exit codes: 0 success, 1 input error, 2 mathematical violation, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .errors import CirpatError, NoConvergence, ParseError
from .geometry import EUCLIDEAN, HYPERBOLIC
from .lattices import lattice_generator, wheel
from .triangulation import AngleFunction, DiskTriangulation, build_triangulation, check_conditions

PRECISION = 12


def _fixed(obj):
    """Round every float to PRECISION significant digits so output diffs stay stable."""
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(f"{obj:.{PRECISION}g}")
    if isinstance(obj, dict):
        return {str(k): _fixed(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fixed(v) for v in obj]
    if isinstance(obj, np.generic):
        return _fixed(obj.item())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_fixed(obj), sort_keys=True, indent=2)


# --- inputs --------------------------------------------------------------------------

@dataclass
class JobSpec:
    command: str
    T: Optional[DiskTriangulation]
    theta: Optional[AngleFunction]
    generator: Optional[Callable[[int], DiskTriangulation]]
    geometry: str
    boundary: str
    levels: Optional[int]
    tol: float
    z2_depth: int
    out: Optional[str]
    seed: int
    angle: float = 0.0


def load_input(path: str):
    """Triangulation and angles from a JSON file of the documented shape."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    return parse_input(data)


def parse_input(data):
    if not isinstance(data, dict) or "faces" not in data:
        raise ParseError("input must be an object with 'faces'")
    try:
        verts = data.get("vertices") or sorted({v for f in data["faces"] for v in f})
        T = build_triangulation([int(v) for v in verts], [[int(v) for v in f] for f in data["faces"]])
        angles = data.get("angles")
        if angles is None:
            theta = AngleFunction.constant(T, 0.0, data.get("epsilon"))
        else:
            theta = AngleFunction.from_json(angles, data.get("epsilon"))
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ParseError(f"bad input: {exc}") from None
    return T, theta


def _generator(args):
    if args.lattice:
        name, n = args.lattice
        degree = {"deg6": 6, "deg7": 7}.get(name)
        if degree is None:
            raise ParseError(f"unknown lattice {name!r}; use deg6 or deg7")
        return lattice_generator(degree), int(n)
    return None, None


def job_from_args(args) -> JobSpec:
    gen, n = _generator(args)
    T = theta = None
    if getattr(args, "input", None):
        T, theta = load_input(args.input)
    elif gen is not None:
        if n < 1:
            raise ParseError("lattice radius must be at least 1")
        T = gen(n)
    elif getattr(args, "wheel", None):
        T = wheel(args.wheel)
    if T is not None and theta is None:
        theta = AngleFunction.constant(T, args.theta)
    levels = getattr(args, "levels", None)
    if levels is not None and levels < 1:
        raise ParseError("--levels must be at least 1")
    return JobSpec(args.command, T, theta, gen, args.geometry, args.boundary, levels, args.tol,
                   args.z2_depth, args.out, args.seed, args.theta)


def _require_T(job: JobSpec):
    if job.T is None:
        raise ParseError("no input: give a JSON file, --lattice or --wheel")


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


# --- commands ---------------------------------------------------------------------------

def cmd_check(job: JobSpec) -> int:
    _require_T(job)
    rep = check_conditions(job.T, job.theta, job.z2_depth)
    lines = [f"{c}: {'pass' if rep.status[c] else 'FAIL'}"
             + (f"  witness {list(rep.witnesses[c][0])}" if rep.witnesses[c] else "") for c in rep.checked]
    sys.stderr.write("\n".join(lines) + "\n")
    _emit(_dumps(rep.to_json()), job.out)
    return 0 if rep.passed else 2


def _boundary(job: JobSpec):
    from .solver import BoundaryCondition

    spec = job.boundary
    if spec == "horocycle":
        return BoundaryCondition.horocycle()
    if spec.startswith("fixed:"):
        try:
            return BoundaryCondition.fixed(float(spec.split(":", 1)[1]))
        except ValueError:
            raise ParseError(f"bad boundary value {spec!r}") from None
    raise ParseError("--boundary must be 'fixed:<r>' or 'horocycle'")


def _solve(job: JobSpec, force: bool = False, log=None):
    from .solver import SolverConfig, solve_dirichlet

    cfg = SolverConfig(tol=job.tol, z2_depth=job.z2_depth, permissive=force, log=log)
    return solve_dirichlet(job.T, job.theta, _boundary(job), cfg, job.geometry)


def _tangency_summary(job, ra) -> dict:
    from .layout import develop

    P = develop(job.T, job.theta, ra)
    gaps = [abs(1 - abs(P.circles[v].center) - P.circles[v].radius) for v in sorted(P.ideal)]
    return {"horocycles": len(gaps), "max_tangency_error": max(gaps, default=0.0)}


def cmd_solve(job: JobSpec, force: bool = False, verbose: bool = False) -> int:
    from .solver import SolverConfig, json_line_logger, solve_exhaustion

    log = json_line_logger(sys.stderr) if verbose else None
    if job.levels is not None:
        if job.generator is None:
            raise ParseError("--levels needs a --lattice generator")
        cfg = SolverConfig(tol=job.tol, z2_depth=job.z2_depth, permissive=force, log=log)
        rep = solve_exhaustion(job.generator, lambda T: AngleFunction.constant(T, job.angle), 0, job.levels,
                               cfg, job.geometry)
        table = [{"level": L.n, "vertices": len(L.T.vertices), "outer_radius": L.outer_radius,
                  "residual": L.hyperbolic.info.get("residual"), "delta": rep.deltas.get(L.n),
                  "core_delta": rep.core_deltas.get(L.n)} for L in rep.levels]
        for row in table:
            sys.stderr.write(f"level {row['level']:>3}  V={row['vertices']:>6}  R={row['outer_radius']:.9f}  "
                             f"delta={row['delta'] if row['delta'] is not None else '-'}\n")
        out = {"levels": table, "converged": rep.converged, "errors": rep.errors}
        if rep.levels:
            out["radii"] = rep.levels[-1].radii.as_dict()
        _emit(_dumps(out), job.out)
        return 3 if rep.errors else 0
    _require_T(job)
    try:
        ra = _solve(job, force, log)
    except NoConvergence as exc:
        best = exc.best
        out = {"error": str(exc), "radii": best.as_dict() if best is not None else None}
        _emit(_dumps(out), job.out)
        raise
    out = {"geometry": job.geometry, "radii": {v: (None if math.isinf(x) else x) for v, x in ra.as_dict().items()},
           "residual": ra.info["residual"], "iterations": ra.info["iterations"]}
    if job.geometry == HYPERBOLIC and job.boundary == "horocycle":
        out["horocycles"] = sorted(v for v, x in ra.as_dict().items() if math.isinf(x))
        out["tangency"] = _tangency_summary(job, ra)
    _emit(_dumps(out), job.out)
    return 0


def _pattern(job: JobSpec, force: bool = False):
    from .layout import develop

    ra = _solve(job, force)
    return develop(job.T, job.theta, ra)


def cmd_classify(job: JobSpec) -> int:
    from .layout import carrier_info
    from .network import classify_type
    from .polyhedra import classify_end
    from .solver import SolverConfig, solve_exhaustion

    if job.generator is None or job.levels is None:
        raise ParseError("classify needs --lattice and --levels")
    rep = classify_type(job.generator, job.levels)
    depth = min(job.levels, 7)
    ex = solve_exhaustion(job.generator, lambda T: AngleFunction.constant(T, job.angle), 0, depth,
                          SolverConfig(tol=job.tol), EUCLIDEAN)
    pats = [L.pattern for L in ex.levels]
    info = carrier_info(pats)
    end = classify_end(pats)
    out = {"type": rep.to_json(), "carrier": {"kind": info.kind.value, "outer_radii": info.outer_radii},
           "end_class": end.verdict.value}
    _emit(_dumps(out), job.out)
    return 0


def cmd_render(job: JobSpec, pattern_path: Optional[str]) -> int:
    from .layout import LaidOutPattern, to_svg

    if pattern_path is not None:
        try:
            with open(pattern_path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{pattern_path}: malformed JSON ({exc})") from None
        if "circles" in data:
            P = LaidOutPattern.from_json(data)
        else:
            T, theta = parse_input(data)
            job.T, job.theta = T, theta
            P = _pattern(job)
    else:
        _require_T(job)
        P = _pattern(job)
    _emit(to_svg(P), job.out)
    return 0


def cmd_mesh(job: JobSpec, fmt: str, truncate: bool, as_json: bool) -> int:
    from .polyhedra import export_mesh, rcp_to_polyhedron

    _require_T(job)
    P = _pattern(job)
    poly = rcp_to_polyhedron(P, job.theta, job.z2_depth)
    if as_json:
        _emit(_dumps(poly.to_json()), job.out)
        return 0
    mesh = export_mesh(poly, truncate=truncate)
    _emit(mesh.to_obj() if fmt == "obj" else mesh.to_ply(), job.out)
    if mesh.unbounded:
        sys.stderr.write(f"{len(mesh.unbounded)} unbounded faces clipped at the horizon: {mesh.unbounded}\n")
    return 0


# --- regression suite ----------------------------------------------------------------------

@dataclass
class Regression:
    name: str
    anchor: str
    check: Callable[[], bool]


def _close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(1.0, abs(b))


def regressions(perturb: Optional[str] = None, seed: int = 0) -> List[Regression]:
    """Pinned reference values; ``perturb`` shifts one expected value to test the harness."""
    from .geometry import (IntersectionKind, TripleConfig, geodesic_curvature, hyperbolic_to_euclidean_circle,
                           quadrilateral_diagonal, triple_intersection_kind, Circle)
    from .layout import develop
    from .network import ANNULUS_CONSTANT, annulus_bound
    from .polyhedra import VertexKind, rcp_to_polyhedron, vertex_kind
    from .lattices import lattice_ball

    shift = {perturb: 1e-6} if perturb else {}

    def quad(case, x, y, z, l13, theta13):
        def run():
            q = quadrilateral_diagonal(x, y, z)
            ok = _close(q.l13, l13 + shift.get(case, 0.0))
            if theta13 is None:
                return ok and q.theta13 is None and q.relation == "disjoint"
            return ok and _close(q.theta13, theta13)
        return run

    def trichotomy():
        cases = [((math.pi / 3,) * 3, VertexKind.IDEAL, IntersectionKind.COMMON_POINT),
                 ((math.pi / 2,) * 3, VertexKind.COMPACT, IntersectionKind.OVERLAP),
                 ((0.0,) * 3, VertexKind.HYPERIDEAL, IntersectionKind.INTERSTICE)]
        return all(vertex_kind(a) is vk and triple_intersection_kind(TripleConfig((1, 1, 1), a)) is ik
                   for a, vk, ik in cases)

    def annulus():
        if not _close(ANNULUS_CONSTANT + shift.get("annulus", 0.0), 24 + 36 * math.pi ** 2):
            return False
        T = lattice_ball(6, 8)
        P = develop(T, AngleFunction.constant(T, 0.0), {v: 1.0 for v in T.vertices})
        rng = np.random.default_rng(seed)
        for _ in range(3):
            r1 = float(rng.uniform(1.0, 4.0))
            r2 = float(rng.uniform(r1 + 2.0, 12.0))
            if not annulus_bound(P, r1, r2).holds:
                return False
        return True

    def hex_wheel_polyhedron():
        T = wheel(6)
        theta = AngleFunction.constant(T, 0.0)
        poly = rcp_to_polyhedron(develop(T, theta, {v: 1.0 for v in T.vertices}), theta)
        return len(poly.halfspaces) == 7 and poly.vertex_classes.count(VertexKind.HYPERIDEAL) == 6

    def cycles():
        g_circle = geodesic_curvature(hyperbolic_to_euclidean_circle(0j, 1.0)).g
        g_horo = geodesic_curvature(Circle(0.5 + 0j, 0.5)).g
        return _close(g_circle, 1 / math.tanh(1.0), 1e-12) and _close(g_horo, 1.0, 1e-12)

    return [
        Regression("quadrilateral-case-1", "four-circle quadrilateral (1,1,1): l13 = sqrt 3, angle pi/3",
                   quad("case1", 1, 1, 1, math.sqrt(3), math.pi / 3)),
        Regression("quadrilateral-case-2", "four-circle quadrilateral (1,1,2): l13 = sqrt(11/3), angle arccos(5/6)",
                   quad("case2", 1, 1, 2, math.sqrt(11 / 3), math.acos(5 / 6))),
        Regression("quadrilateral-case-3", "four-circle quadrilateral (1,4,4): l13 = 6, disks disjoint",
                   quad("case3", 1, 4, 4, 6.0, None)),
        Regression("annulus-constant", "annulus lower bound with constant 24 + 36 pi^2", annulus),
        Regression("vertex-trichotomy", "angle sum >, =, < pi gives compact, ideal, hyperideal", trichotomy),
        Regression("tangent-hex-wheel", "tangent hexagonal wheel: 7 faces, 6 hyperideal vertices",
                   hex_wheel_polyhedron),
        Regression("geodesic-curvature", "g = coth(rho) for circles, 1 for horocycles", cycles),
    ]


def cmd_regressions(perturb: Optional[str], seed: int) -> int:
    failed = 0
    for reg in regressions(perturb, seed):
        try:
            ok = bool(reg.check())
        except CirpatError as exc:
            ok = False
            sys.stdout.write(f"  error: {exc}\n")
        failed += not ok
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'}  {reg.name:<24} [{reg.anchor}]\n")
    return 0 if failed == 0 else 2


# --- argument parsing ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", help="JSON triangulation with angles")
    common.add_argument("--lattice", nargs=2, metavar=("KIND", "N"), help="built-in ball: deg6 N or deg7 N")
    common.add_argument("--wheel", type=int, metavar="K", help="built-in wheel with K spokes")
    common.add_argument("--theta", type=float, default=0.0, help="constant angle for built-in inputs")
    common.add_argument("--geometry", choices=(EUCLIDEAN, HYPERBOLIC), default=EUCLIDEAN)
    common.add_argument("--boundary", default="fixed:1", help="fixed:<r> or horocycle")
    common.add_argument("--levels", type=int, help="exhaustion depth")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--z2-depth", type=int, default=8, dest="z2_depth")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="cirpat", description="Circle patterns, extremal length and polyhedra.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="check conditions Z1-Z4")
    s = sub.add_parser("solve", parents=[common], help="solve for radii")
    s.add_argument("--force", action="store_true", help="only require Z1")
    s.add_argument("--verbose", action="store_true", help="stream solver diagnostics to stderr")
    sub.add_parser("classify", parents=[common], help="VEL type, carrier and end classification")
    r = sub.add_parser("render", parents=[common], help="SVG of a pattern")
    r.add_argument("--pattern", help="pattern JSON (circles) or triangulation JSON")
    m = sub.add_parser("mesh", parents=[common], help="polyhedron mesh (Klein model)")
    m.add_argument("--format", choices=("obj", "ply"), default="obj")
    m.add_argument("--no-truncate", action="store_true")
    m.add_argument("--json", action="store_true", help="polyhedron description instead of a mesh")
    g = sub.add_parser("regressions", parents=[common], help="pinned reference values")
    g.add_argument("--perturb", help="shift one expected value (harness self-test)")
    return p


def _thread_limit():
    env = os.environ.get("CIRPAT_THREADS")
    if not env:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=max(1, int(env)))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit():
            if args.command == "regressions":
                return cmd_regressions(args.perturb, args.seed)
            if args.command == "render" and args.pattern:
                job = job_from_args(args)
                return cmd_render(job, args.pattern)
            job = job_from_args(args)
            if args.command == "check":
                return cmd_check(job)
            if args.command == "solve":
                return cmd_solve(job, args.force, args.verbose)
            if args.command == "classify":
                return cmd_classify(job)
            if args.command == "render":
                return cmd_render(job, None)
            if args.command == "mesh":
                return cmd_mesh(job, args.format, not args.no_truncate, args.json)
    except CirpatError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
