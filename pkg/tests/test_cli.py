import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import signed_basis
from dualmink.bodies import Ball, RadialGrid, cube, truncated_cube
from dualmink.cli import ExitCode, run
from dualmink.io import canonical_text, digest, read_document
from dualmink.measures import DiscreteMeasure
from dualmink.sphere import build_grid


@pytest.fixture
def ball(write):
    return write("ball.json", Ball(3).to_document())


@pytest.fixture
def disc(write):
    return write("disc.json", Ball(2).to_document())


@pytest.fixture
def basis(write, basis3):
    return write("basis.json", basis3.to_document())


def load(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------- #
# curvature

def test_curvature_of_the_cube(write, ball, tmp_path):
    body = write("cube.json", cube(3).to_document())
    out = tmp_path / "out"
    assert run(["curvature", body, ball, "--q", "3", "--out-dir", str(out)]) == ExitCode.OK
    measure = load(out / "measure.json")
    assert len(measure["weights"]) == 6
    np.testing.assert_allclose(measure["weights"], 4 / 3, rtol=1e-2)
    assert load(out / "manifest.json")["outputs"] == ["measure.json"]


def test_curvature_at_q_equal_n_ignores_the_star(write, ball, tmp_path):
    body = write("body.json", truncated_cube(3, 1.5).to_document())
    ellipsoid = write("ellipsoid.json", {
        "schema": "dualmink.star/1", "dim": 3, "variant": "ellipsoid",
        "parameters": {"semi_axes": [0.5, 1.0, 2.0]},
    })
    run(["curvature", body, ball, "--q", "3", "--out-dir", str(tmp_path / "a")])
    run(["curvature", body, ellipsoid, "--q", "3", "--out-dir", str(tmp_path / "b")])
    a = load(tmp_path / "a" / "measure.json")["weights"]
    b = load(tmp_path / "b" / "measure.json")["weights"]
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


def test_logarithmic_curvature_of_the_cube(write, ball, tmp_path):
    body = write("cube.json", cube(3).to_document())
    assert run(["curvature", body, ball, "--q", "0", "--out-dir", str(tmp_path)]) == ExitCode.OK
    np.testing.assert_allclose(load(tmp_path / "measure.json")["weights"], 2 * math.pi / 9, rtol=1e-3)


def test_curvature_output_is_byte_identical(write, ball, tmp_path):
    body = write("cube.json", cube(3).scaled(1.3).to_document())
    for name in ("first", "second"):
        run(["curvature", body, ball, "--q", "1.5", "--grid-resolution", "32",
             "--out-dir", str(tmp_path / name)])
    first = (tmp_path / "first" / "measure.json").read_bytes()
    assert first == (tmp_path / "second" / "measure.json").read_bytes()
    assert canonical_text(read_document(tmp_path / "first" / "measure.json")).encode("utf-8") == first


def test_curvature_rejects_mismatched_dimensions(write, disc, tmp_path):
    body = write("cube.json", cube(3).to_document())
    assert run(["curvature", body, disc, "--q", "1", "--out-dir", str(tmp_path)]) == ExitCode.INPUT_ERROR


# ---------------------------------------------------------------------- #
# check

def test_check_passes_for_the_basis(basis, tmp_path):
    assert run(["check", basis, "--q", "2", "--out-dir", str(tmp_path)]) == ExitCode.OK
    assert load(tmp_path / "preconditions.json")["status"] == "pass"


def test_check_reports_the_heavy_line(write, heavy_line, tmp_path):
    path = write("heavy.json", heavy_line.to_document())
    assert run(["check", path, "--q", "2", "--out-dir", str(tmp_path)]) == ExitCode.PRECONDITION_FAILURE
    report = load(tmp_path / "preconditions.json")
    assert report["subspace_mass"]["entries"][0]["witness"] == [0, 1]


def test_check_at_the_slack_boundary_is_indeterminate(write, tmp_path):
    mu = DiscreteMeasure(signed_basis(3), [0.5, 0.5, 0.25, 0.25, 0.25, 0.25])
    path = write("boundary.json", mu.to_document())
    assert run(["check", path, "--q", "2", "--out-dir", str(tmp_path)]) == ExitCode.INDETERMINATE


def test_check_logarithmic_mass_balance(basis, ball, tmp_path):
    code = run(["check", basis, "--q", "0", "--star", ball, "--grid-resolution", "48",
                "--out-dir", str(tmp_path)])
    assert code == ExitCode.PRECONDITION_FAILURE
    assert load(tmp_path / "preconditions.json")["mass_balance"]["passed"] is False


def test_check_missing_file(tmp_path):
    missing = str(tmp_path / "absent.json")
    assert run(["check", missing, "--q", "1", "--out-dir", str(tmp_path)]) == ExitCode.INPUT_ERROR


def test_check_malformed_measure(write, tmp_path):
    path = write("bad.json", {"schema": "dualmink.measure/1", "dim": 3, "atoms": [[1, 0, 0]]})
    assert run(["check", path, "--q", "1", "--out-dir", str(tmp_path)]) == ExitCode.INPUT_ERROR


# ---------------------------------------------------------------------- #
# solve

def test_curvature_then_solve_recovers_the_body(write, disc, tmp_path):
    body = write("square.json", truncated_cube(2, 1.2).to_document())
    grid = ["--grid-resolution", "128"]
    assert run(["curvature", body, disc, "--q", "1", *grid, "--out-dir", str(tmp_path / "c")]) == ExitCode.OK
    measure = str(tmp_path / "c" / "measure.json")
    out = tmp_path / "s"
    assert run(["solve", measure, disc, "--q", "1", *grid, "--out-dir", str(out)]) == ExitCode.OK

    report = load(out / "report.json")
    assert report["status"] == "converged"
    assert report["residual"] <= 2e-2
    assert load(out / "solution.json")["schema"] == "dualmink.polytope/1"
    with open(out / "trace.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["iter", "J", "grad_norm", "step"]
    assert len(rows) == len(report["objective_trace"]) + 1


def test_solve_refuses_the_heavy_line(write, heavy_line, ball, tmp_path):
    path = write("heavy.json", heavy_line.to_document())
    code = run(["solve", path, ball, "--q", "2", "--out-dir", str(tmp_path)])
    assert code == ExitCode.PRECONDITION_FAILURE
    report = load(tmp_path / "report.json")
    assert report["status"] == "refused_preconditions"
    assert report["solution"] is None
    assert report["preconditions"]["subspace_mass"]["entries"][0]["witness"] == [0, 1]
    assert not (tmp_path / "solution.json").exists()


def test_solve_at_q_zero_needs_balanced_mass(basis, ball, tmp_path):
    code = run(["solve", basis, ball, "--q", "0", "--grid-resolution", "48", "--out-dir", str(tmp_path)])
    assert code == ExitCode.PRECONDITION_FAILURE


def test_solve_reports_the_iteration_cap(write, disc, tmp_path):
    body = write("square.json", truncated_cube(2, 1.2).to_document())
    run(["curvature", body, disc, "--q", "1", "--out-dir", str(tmp_path / "c")])
    code = run(["solve", str(tmp_path / "c" / "measure.json"), disc, "--q", "1", "--max-iters", "1",
                "--tolerance", "1e-12", "--out-dir", str(tmp_path / "s")])
    assert code == ExitCode.NOT_CONVERGED
    assert load(tmp_path / "s" / "report.json")["status"] == "max_iter"


def test_solve_needs_q(basis, ball, tmp_path):
    assert run(["solve", basis, ball, "--out-dir", str(tmp_path)]) == ExitCode.INPUT_ERROR


def test_solve_rejects_a_star_sampled_on_another_grid(write, basis, tmp_path):
    grid = build_grid(3, 16)
    star = write("sampled.json", RadialGrid(grid, np.ones(grid.size)).to_document())
    code = run(["solve", basis, star, "--q", "2", "--grid-resolution", "24", "--out-dir", str(tmp_path)])
    assert code == ExitCode.INPUT_ERROR
    assert not (tmp_path / "report.json").exists()


def test_solve_reads_a_config_file(write, basis, ball, tmp_path):
    config = write("config.json", {"schema": "dualmink.config/1", "q": 3.0, "max_iters": 5})
    code = run(["solve", basis, ball, "--config", config, "--out-dir", str(tmp_path)])
    assert code == ExitCode.PRECONDITION_FAILURE
    assert load(tmp_path / "report.json")["config"]["max_iters"] == 5


def test_bad_config_is_an_input_error(write, basis, ball, tmp_path):
    config = write("config.json", {"schema": "dualmink.config/1", "q": 1.0, "colour": "red"})
    assert run(["solve", basis, ball, "--config", config, "--out-dir", str(tmp_path)]) == ExitCode.INPUT_ERROR


# ---------------------------------------------------------------------- #
# estimate

def test_estimate_of_the_identity(tmp_path):
    code = run(["estimate", "--alpha", "3", "--diagonal", "1", "1", "1", "--out-dir", str(tmp_path)])
    assert code == ExitCode.OK
    document = load(tmp_path / "estimate.json")
    assert document["integral"] == pytest.approx(4 * math.pi, rel=1e-2)
    assert document["estimate"] == 1.0
    assert document["case"] == "alpha_ge_n"
    assert not (tmp_path / "sweep.csv").exists()


def test_estimate_sweep(tmp_path):
    code = run(["estimate", "--alpha", "1.5", "--diagonal", "2", "1", "1", "--spreads", "1", "10", "100",
                "--grid-resolution", "48", "--out-dir", str(tmp_path)])
    assert code == ExitCode.OK
    with open(tmp_path / "sweep.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert len(rows) == 4
    assert len(load(tmp_path / "estimate.json")["sweep"]["rows"]) == 3


def test_estimate_rejects_non_positive_entries(tmp_path):
    code = run(["estimate", "--alpha", "1", "--diagonal", "1", "0", "--out-dir", str(tmp_path)])
    assert code == ExitCode.INPUT_ERROR


# ---------------------------------------------------------------------- #
# selftest

def test_selftest_passes(tmp_path):
    assert run(["selftest", "--out-dir", str(tmp_path)]) == ExitCode.OK
    assert load(tmp_path / "selftest.json")["passed"] is True


def test_selftest_report_is_reproducible(tmp_path):
    for name in ("first", "second"):
        run(["selftest", "--out-dir", str(tmp_path / name)])
    first = read_document(tmp_path / "first" / "selftest.json")
    assert digest(first) == digest(read_document(tmp_path / "second" / "selftest.json"))


@pytest.mark.parametrize("fault, invariant", [
    ("weights", "weight-sum invariant"),
    ("norms", "node-norm invariant"),
    ("antipodes", "antipodal-symmetry invariant"),
])
def test_selftest_names_the_broken_invariant(tmp_path, fault, invariant):
    assert run(["selftest", "--fault", fault, "--out-dir", str(tmp_path)]) == ExitCode.SELFTEST_FAILURE
    results = load(tmp_path / "selftest.json")["results"]
    failed = [result["name"] for result in results if not result["passed"]]
    assert failed == [invariant]


def test_unknown_command_exits_through_argparse():
    with pytest.raises(SystemExit):
        run(["reticulate"])
