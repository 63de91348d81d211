import csv
import json
import math

import pytest
from pytest import mark

from backend.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, dispatch, float_range


def json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line]


def test_coeff_table_as_csv(capsys):
    code = dispatch(["coeff", "--kind", "sphere-modified", "--dim", "3", "--t", "0:2:1", "--format", "csv"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].startswith("# manifest ")
    assert json.loads(lines[0][len("# manifest "):])["command"] == "coeff"
    rows = list(csv.DictReader(lines[1:]))
    assert [float(row["t"]) for row in rows] == [0.0, 1.0, 2.0]
    assert float(rows[0]["value"]) == 1.0
    assert float(rows[1]["value"]) == pytest.approx(1.1752012, abs=1e-7)


def test_coeff_json_lines_carry_the_manifest(capsys):
    code = dispatch(["coeff", "--kind", "ball-helmholtz", "--dim", "2", "--t", "0:1:0.5"])
    records = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert len(records) == 3
    for record in records:
        assert record["kind"] == "ball-helmholtz"
        assert record["manifest"]["command"] == "coeff"
        assert record["manifest"]["parameters"]["dim"] == "2"
        assert record["manifest"]["timestamp"]


def test_coeff_derivatives(capsys):
    code = dispatch(["coeff", "--kind", "sphere-helmholtz", "--dim", "3", "--t", "1:1:1", "--derivative"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    # d/dt sin t / t = (t cos t - sin t) / t^2
    assert record["derivative"] == pytest.approx(math.cos(1.0) - math.sin(1.0), rel=1e-9)


def test_verify_identities(capsys):
    code = dispatch(["verify", "--suite", "identities", "--dim", "2", "--seed", "7", "--cases", "2"])
    records = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert len(records) == 32
    assert all(record["passed"] for record in records)
    assert records[0]["manifest"]["seed"] == 7


def test_verify_csv_has_one_row_per_residual(capsys):
    code = dispatch(["verify", "--suite", "eigen", "--format", "csv"])
    lines = capsys.readouterr().out.splitlines()
    assert code == EXIT_OK
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 4
    assert {row["name"] for row in rows} == {"eigen"}


def test_wos_at_the_centre(capsys):
    code = dispatch(["wos", "--shape", "ball", "--dim", "3", "--mu", "1", "--boundary", "const:1", "--at", "0,0,0"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert record["value"] == pytest.approx(1.0 / math.sinh(1.0), rel=1e-12)
    assert record["point"] == [0.0, 0.0, 0.0]
    assert record["valid"] is True


def test_wos_is_reproducible(capsys):
    argv = ["wos", "--dim", "2", "--boundary", "exp:0.6,0.8", "--at", "0.3,0", "--walks", "2000", "--seed", "3"]
    values = []
    for workers in ("1", "2"):
        assert dispatch(argv + ["--workers", workers]) == EXIT_OK
        (record,) = json_lines(capsys.readouterr().out)
        values.append((record["value"], record["std_error"]))
    assert values[0] == values[1]


def test_wos_grid_with_an_outside_point(capsys):
    code = dispatch(["wos", "--at", "0,0,0", "--at", "2,0,0", "--walks", "500"])
    records = json_lines(capsys.readouterr().out)
    assert code == EXIT_FAILED
    assert "error" in records[1]
    assert "value" in records[0]


def test_wos_truncation_fails_the_run(capsys):
    code = dispatch(["wos", "--at", "0.5,0,0", "--walks", "500", "--max-steps", "1"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_FAILED
    assert record["valid"] is False


@mark.parametrize(
    "argv",
    (
        ["coeff", "--kind", "cube-modified", "--t", "0:1:1"],
        ["coeff", "--kind", "sphere-modified"],
        ["coeff", "--t", "1:0:1"],
        ["coeff", "--t", "0:1"],
        ["coeff", "--kind", "ball-modified", "--t", "0:1:1", "--derivative"],
        ["wos", "--at", "2,0,0"],
        ["wos", "--at", "0,0"],
        ["wos", "--at", "0,0,0", "--boundary", "sin:1"],
        ["nodal", "--at", "0,0,0", "--r-star", "3"],
        ["nodal", "--solution", "plane", "--dim", "2", "--direction", "1,1", "--at", "0,0", "--r-star", "3"],
        ["liouville", "--radii", "1:20:1"],
        ["growth", "--dim", "3", "--at", "0.1,0,0", "--radii", "0,1"],
        ["frobnicate"],
    ),
)
def test_usage_and_domain_errors(argv, capsys):
    assert dispatch(argv) == EXIT_USAGE


def test_rmvp_of_a_solution_passes(capsys):
    code = dispatch(["rmvp", "--solution", "plane", "--dim", "2", "--shape", "box", "--k", "0.8"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert record["name"] == "rmvp-plane-modified"


def test_rmvp_of_a_non_solution_fails(capsys):
    code = dispatch(["rmvp", "--field", "x1", "--dim", "3", "--mu", "1"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_FAILED
    assert record["passed"] is False


@mark.parametrize("dim", ("2", "3", "5"))
def test_liouville(dim, capsys):
    code = dispatch(["liouville", "--dim", dim])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert record["name"] == "liouville"


def test_nodal(capsys):
    code = dispatch(["nodal", "--dim", "3", "--k", "1", "--at", "0,0,0", "--r-star", "4", "--shells", "2"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert math.dist(record["point"], [0.0, 0.0, 0.0]) == pytest.approx(math.pi, abs=1e-10)
    assert record["shells"] == pytest.approx([math.pi, 2 * math.pi], abs=1e-10)


def test_maxprin(capsys):
    argv = ["maxprin", "--dim", "2", "--solution", "plane", "--k", "0.9", "--n-interior", "2000", "--n-boundary", "500"]
    code = dispatch(argv)
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert record["name"] == "max-principle"


def test_growth(capsys):
    code = dispatch(["growth", "--dim", "3", "--solution", "plane", "--at", "0.1,0,0"])
    (record,) = json_lines(capsys.readouterr().out)
    assert code == EXIT_OK
    assert len(record["residuals"]) == 6


def test_output_file(tmp_path, capsys):
    target = tmp_path / "table.csv"
    code = dispatch(["coeff", "--t", "0:1:0.25", "--format", "csv", "--out", str(target)])
    assert code == EXIT_OK
    assert capsys.readouterr().out == ""
    assert len(target.read_text(encoding="utf-8").splitlines()) == 1 + 1 + 5


def test_unwritable_output(tmp_path, capsys):
    assert dispatch(["coeff", "--t", "0:1:1", "--out", str(tmp_path)]) == EXIT_USAGE


def test_float_range_includes_both_ends():
    assert float_range("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert float_range("2:2:1") == [2.0]
