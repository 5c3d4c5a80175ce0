import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cirpat.lattices import lattice_ball, wheel  # noqa: E402
from cirpat.layout import develop  # noqa: E402
from cirpat.solver import BoundaryCondition, solve_dirichlet  # noqa: E402
from cirpat.triangulation import AngleFunction  # noqa: E402

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): one acceptance criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE.append((mark.args[0], rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    # parametrized criteria report once: PASS only if every case passed
    verdicts = {}
    for label, ok in _ACCEPTANCE:
        verdicts[label] = verdicts.get(label, True) and ok
    for label, ok in verdicts.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def solved_pattern(T, theta, boundary=1.0, geometry="euclidean"):
    bc = BoundaryCondition.horocycle() if boundary == "horocycle" else BoundaryCondition.fixed(boundary)
    ra = solve_dirichlet(T, theta, bc, geometry=geometry)
    return ra, develop(T, theta, ra)


def random_angles(T, rng, hi=math.pi / 2, lo=0.0):
    return AngleFunction({e: float(rng.uniform(lo, hi)) for e in T.edges})


@pytest.fixture(scope="session")
def hex_wheel():
    return wheel(6)


@pytest.fixture(scope="session")
def hex_packing():
    T = lattice_ball(6, 4)
    theta = AngleFunction.constant(T, 0.0)
    return solved_pattern(T, theta)[1]
