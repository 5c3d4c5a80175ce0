import json
import math
import subprocess
import sys

import pytest

from cirpat.cli import main, regressions
from cirpat.layout import LaidOutPattern, to_svg
from cirpat.triangulation import build_triangulation


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def test_check_zero_angles_passes(capsys, tmp_path):
    path = write(tmp_path, "wheel.json", {"faces": [[0, k, k % 6 + 1] for k in range(1, 7)]})
    code, out, err = run(capsys, "check", path)
    assert code == 0
    rep = json.loads(out)
    assert rep["status"] == {c: "pass" for c in ("Z1", "Z2", "Z3", "Z4")}
    assert "Z4: pass" in err


def test_check_obtuse_face_fails_with_witness(capsys, tmp_path):
    t = 2 * math.pi / 3
    path = write(tmp_path, "face.json", {"faces": [[0, 1, 2]], "angles": {"0-1": t, "1-2": t, "0-2": t}})
    code, out, err = run(capsys, "check", path)
    assert code == 2
    assert "Z4: FAIL  witness [0, 1, 2]" in err
    # cos t + cos^2 t = -1/4 < 0 on every edge, so the face itself is the witness
    assert math.cos(t) + math.cos(t) ** 2 < 0


def test_malformed_input(capsys, tmp_path):
    path = write(tmp_path, "bad.json", "{faces: [")
    code, _, err = run(capsys, "check", path)
    assert code == 1 and "ParseError" in err
    code, _, _ = run(capsys, "check", str(tmp_path / "missing.json"))
    assert code == 1
    code, _, _ = run(capsys, "check", write(tmp_path, "nofaces.json", {"vertices": [0]}))
    assert code == 1


def test_check_is_deterministic(capsys):
    a = run(capsys, "check", "--lattice", "deg7", "2", "--theta", "1.2")
    b = run(capsys, "check", "--lattice", "deg7", "2", "--theta", "1.2")
    assert a == b


def test_solve_flat_wheel(capsys):
    code, out, _ = run(capsys, "solve", "--wheel", "6")
    assert code == 0
    assert json.loads(out)["radii"]["0"] == pytest.approx(1.0, abs=1e-10)


def test_solve_horocycle_wheel(capsys):
    code, out, _ = run(capsys, "solve", "--wheel", "6", "--geometry", "hyperbolic", "--boundary", "horocycle")
    assert code == 0
    res = json.loads(out)
    assert res["horocycles"] == [1, 2, 3, 4, 5, 6]
    assert res["tangency"]["max_tangency_error"] < 1e-9
    # six mutually tangent horocycles around one circle: Euclidean radii 1/3 in the disk model
    assert res["radii"]["0"] == pytest.approx(2 * math.atanh(1 / 3), rel=1e-9)


def test_solve_levels_table(capsys):
    code, out, err = run(capsys, "solve", "--lattice", "deg6", "1", "--levels", "5")
    assert code == 0
    res = json.loads(out)
    assert [row["level"] for row in res["levels"]] == [2, 3, 4, 5]
    assert err.count("level") == 4
    radii = [row["outer_radius"] for row in res["levels"]]
    assert all(b > a for a, b in zip(radii, radii[1:]))


def test_convergence_failure_exit_code(capsys):
    code, out, err = run(capsys, "solve", "--lattice", "deg6", "3", "--tol", "1e-300")
    assert code == 3 and "NoConvergence" in err
    assert json.loads(out)["radii"] is not None


def test_bad_arguments(capsys):
    assert run(capsys, "solve", "--wheel", "6", "--tol", "0")[0] == 1
    assert run(capsys, "solve", "--wheel", "6", "--boundary", "fixed:abc")[0] == 1
    assert run(capsys, "solve", "--lattice", "deg9", "2")[0] == 1
    assert run(capsys, "solve", "--wheel", "6", "--levels", "3")[0] == 1
    assert run(capsys, "check")[0] == 1


def test_violation_blocks_solve(capsys):
    code, _, err = run(capsys, "solve", "--wheel", "4", "--theta", "1.6")
    assert code == 2 and "ConditionViolated" in err


def test_render_is_byte_stable(capsys, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    assert run(capsys, "render", "--wheel", "6", "--out", str(a))[0] == 0
    assert run(capsys, "render", "--wheel", "6", "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    svg = a.read_text()
    assert svg.count("<circle") == 7 and svg.rstrip().endswith("</svg>")


def test_render_triangulation_file_and_empty_pattern(capsys, tmp_path):
    path = write(tmp_path, "triangle.json", {"faces": [[0, 1, 2]]})
    code, out, _ = run(capsys, "render", "--pattern", path)
    assert code == 0 and out.count("<circle") == 3
    T = build_triangulation([0, 1, 2], [(0, 1, 2)])
    empty = LaidOutPattern(T, "euclidean", {}, {}, 0)
    assert to_svg(empty).startswith("<svg") and "<circle" not in to_svg(empty)


def test_mesh_output(capsys):
    code, out, err = run(capsys, "mesh", "--wheel", "6", "--theta", "0.3")
    assert code == 0
    lines = out.splitlines()
    assert any(ln.startswith("v ") for ln in lines) and any(ln.startswith("f ") for ln in lines)
    assert "unbounded" in err
    assert run(capsys, "mesh", "--wheel", "6", "--theta", "0.3")[1] == out
    code, out, _ = run(capsys, "mesh", "--wheel", "6", "--json")
    data = json.loads(out)
    assert len(data["faces"]) == 7 and set(data["vertex_classes"].values()) == {"hyperideal"}
    code, out, _ = run(capsys, "mesh", "--wheel", "6", "--format", "ply")
    assert out.startswith("ply\n")


def test_classify(capsys):
    code, out, _ = run(capsys, "classify", "--lattice", "deg7", "1", "--levels", "4")
    assert code == 0
    res = json.loads(out)
    assert res["type"]["verdict"] in ("Parabolic", "Hyperbolic", "Inconclusive")
    assert res["end_class"] in ("Parabolic", "Hyperbolic", "Other")
    assert run(capsys, "classify", "--wheel", "6")[0] == 1


def test_regressions_pass(capsys):
    code, out, _ = run(capsys, "regressions")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == len(regressions()) and all(ln.startswith("PASS") for ln in lines)
    # every check is listed with the statement it pins
    assert all("[" in ln and ln.endswith("]") for ln in lines)


def test_regression_harness_catches_a_shift(capsys):
    code, out, _ = run(capsys, "regressions", "--perturb", "case2")
    assert code == 2
    failed = [ln for ln in out.splitlines() if ln.startswith("FAIL")]
    assert len(failed) == 1 and "quadrilateral-case-2" in failed[0]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "cirpat.cli", "check", "--wheel", "5"],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and json.loads(res.stdout)
