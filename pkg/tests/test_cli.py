import csv
import io
import json
from math import pi
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from hiso import __version__
from hiso.cli import main

SCHEMAS = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def schema(name):
    return json.loads((SCHEMAS / name).read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out), err


def test_verify_n2(capsys):
    code, rep, _ = run_json(capsys, "verify", "--n", "2")
    assert code == 0 and rep["passed"]
    jsonschema.validate(rep, schema("header.schema.json"))
    jsonschema.validate(rep, schema("verify_report.schema.json"))
    names = {c["name"].split(".")[0] for c in rep["checks"]}
    assert {"curvature", "eigenfunction", "green", "pole_identity"} <= names
    assert rep["version"] == __version__


def test_verify_n1_excludes_pole_identities(capsys):
    code, rep, _ = run_json(capsys, "verify", "--n", "1")
    assert code == 0
    excluded = [c for c in rep["checks"] if c["name"].startswith("pole_identity")]
    assert len(excluded) == 2
    assert all(c["status"] == "excluded: integrability (n=1)" for c in excluded)


@pytest.mark.parametrize("argv", [
    ["verify", "--n", "0"],
    ["verify", "--tol", "-1"],
    ["geodesic", "--plast", "0"],
    ["variation", "--phi", "rho +* 2"],
    ["variation", "--phi", "1", "--parity", "odd"],
    ["stability", "--family", "polar", "--n", "2"],
    ["tgraph", "--example", "quadratic", "--n", "2"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("hiso ")


def test_unknown_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "--bogus"])
    assert info.value.code == 2


def test_parse_error_has_caret(capsys):
    code, _, err = run(capsys, "variation", "--phi", "rho + $")
    assert code == 2
    assert err.rstrip().splitlines()[-1].strip() == "^"


def test_numeric_failure_exit(capsys):
    code, _, err = run(capsys, "frobenius", "--n", "2", "--m", "1", "--mu", "-4")
    assert code == 3 and "numeric failure" in err


def test_frobenius_binomial(capsys):
    code, rep, _ = run_json(capsys, "frobenius", "--n", "2", "--m", "1", "--mu", "2", "--terms", "8")
    assert code == 0
    assert rep["coefficients"] == [1.0, 0.0, -0.5, 0.0, -0.125, 0.0, -0.0625, 0.0]
    assert [c["admissible"] for c in rep["candidates"]] == [True, False, False]


def test_geodesic_trace(capsys, tmp_path):
    out = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "geodesic", "--plast", "2", "--out", str(out))
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["s", "x1", "y1", "t", "dt"]
    last = rows[-1]
    assert float(last["dt"]) == pytest.approx(pi / 4, abs=1e-8)
    assert abs(float(last["x1"])) < 1e-8 and abs(float(last["y1"])) < 1e-8
    assert float(last["s"]) == pytest.approx(pi, abs=1e-12)


def test_variation_kappa(capsys):
    code, rep, _ = run_json(capsys, "variation", "--n", "2", "--phi", "sqrt(1-rho^2)/rho", "--parity", "odd")
    assert code == 0
    assert abs(rep["F"]) < 1e-8
    assert rep["G"] == pytest.approx(2.0, rel=1e-10)
    assert rep["config"]["phi"] == "sqrt(1-rho^2)/rho"


def test_variation_n1_polar(capsys):
    code, rep, _ = run_json(capsys, "variation", "--n", "1", "--phi", "rho*cos(theta)")
    assert code == 0 and rep["F"] > 0


def test_stability_report_schema(capsys):
    code, rep, _ = run_json(capsys, "stability", "--n", "3", "--family", "legendre", "--count", "6")
    assert code == 0
    jsonschema.validate(rep, schema("stability_report.schema.json"))
    assert rep["verdict"] == "nonnegative" and len(rep["tests"]) == 6


def test_eigen_report_schema(capsys, tmp_path):
    ef = tmp_path / "mode.csv"
    code, rep, _ = run_json(capsys, "eigen", "--n", "2", "--elements", "800", "--k", "3",
                            "--eigenfunction-csv", str(ef))
    assert code == 0
    jsonschema.validate(rep, schema("eigen_report.schema.json"))
    assert rep["lowest_admissible"] == pytest.approx(2.0, rel=2e-2)
    data = np.loadtxt(ef, delimiter=",", skiprows=1)
    assert data.shape == (801, 2)


def test_profile_export(capsys):
    code, out, _ = run(capsys, "profile", "--n", "1", "--samples", "5", "--plast", "2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 10
    assert all(float(r["H"]) == -2.0 for r in rows)


def test_tgraph_examples(capsys, tmp_path):
    code, out, _ = run(capsys, "tgraph", "--n", "1", "--example", "quadratic", "--samples", "4")
    assert code == 0
    for r in csv.DictReader(io.StringIO(out)):
        assert float(r["H_fd"]) == pytest.approx(float(r["H_analytic"]), abs=1e-8)
    code, rep, _ = run_json(capsys, "tgraph", "--n", "1", "--example", "constant", "--admissibility")
    assert code == 0 and rep["admissibility"]["estimate"] == pytest.approx(4 * pi, abs=1e-8)

    xs = np.linspace(-1, 1, 21)
    grid = tmp_path / "g.csv"
    grid.write_text("x,y,u\n" + "".join(f"{x!r},{y!r},{0.25 * (x * x + y * y) + x * y!r}\n"
                                         for x in map(float, xs) for y in map(float, xs)))
    code, rep, _ = run_json(capsys, "tgraph", "--n", "1", "--grid", str(grid))
    assert code == 0 and len(rep["rows"]) == 19 * 19
    json.dumps(rep, allow_nan=False)


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, _ = run(capsys, "tgraph", "--n", "1", "--grid", str(tmp_path / "none.csv"))
    assert code == 2


def test_outputs_are_byte_identical(capsys, monkeypatch):
    argv = ["stability", "--n", "2", "--family", "bumps", "--count", "8", "--format", "csv"]
    a = run(capsys, *argv, "--threads", "1")[1]
    b = run(capsys, *argv, "--threads", "1")[1]
    c = run(capsys, *argv, "--threads", "3")[1]
    assert a == b == c


def test_thread_env_override(capsys, monkeypatch):
    monkeypatch.setenv("HISO_THREADS", "2")
    _, rep, _ = run_json(capsys, "frobenius", "--m", "1", "--mu", "2", "--threads", "5")
    assert rep["config"]["threads"] == 2
    monkeypatch.setenv("HISO_THREADS", "zero")
    assert run(capsys, "frobenius", "--m", "1", "--mu", "2")[0] == 2
