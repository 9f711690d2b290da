import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from twistrod import cli
from twistrod import contraction as ct
from twistrod import crosssection as cs
from twistrod import io
from twistrod import liegroup as lg
from twistrod.fitting import MarkerObservation
from twistrod.mechanics import equilibrium, nominal_stiffness

SPECS = Path(__file__).resolve().parents[1] / "specs"


@pytest.fixture
def specs(tmp_path):
    out = tmp_path / "specs"
    shutil.copytree(SPECS, out)
    return out


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_report(out):
    return json.loads((out / "report.json").read_text())["rows"]


def test_planar_sweep_report(specs, tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--spec", specs / "planar_101.json", "--sweep", "a1=0:345:8,a2=0",
               "--out", out, "--quiet") == 0
    rows = read_report(out)
    assert len(rows) == 8
    assert [r["a1_kpa"] for r in rows][-1] == 345.0
    w = np.array([r["curvature_norm"] for r in rows])
    assert w[0] < 1e-12 and np.all(np.diff(w) > 0)
    assert len(list(out.glob("geometry_*.csv"))) == 8
    assert (out / "report.csv").read_text().count("\n") == 9


def test_simulate_is_deterministic_and_leaves_inputs(specs, tmp_path):
    spec = specs / "helical_80.json"
    before = spec.read_bytes()
    for name in ("a", "b"):
        assert run("simulate", "--spec", spec, "--sweep", "a1=0:300:4", "--out", tmp_path / name,
                   "--quiet", "--actuators") == 0
    assert spec.read_bytes() == before
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_equal_pressure_radial_has_no_curvature(specs, tmp_path):
    assert run("simulate", "--spec", specs / "radial_80.json", "--sweep", "a1=0:345:5,a2=0:345:5,a3=0:345:5",
               "--out", tmp_path, "--quiet") == 0
    for r in read_report(tmp_path):
        assert r["curvature_norm"] < 1e-10
        assert r["v_x"] == pytest.approx(r["a1_length_m"], abs=1e-10)


def test_helical_single_muscle_three_conditions(specs, tmp_path):
    assert run("simulate", "--spec", specs / "helical_80.json", "--sweep", "a1=103/241/345",
               "--out", tmp_path, "--quiet") == 0
    rows = read_report(tmp_path)
    assert [r["a1_kpa"] for r in rows] == [103.0, 241.0, 345.0]
    assert all(abs(r["w_x"]) > 0 and abs(r["w_z"]) + abs(r["w_y"]) > 0 for r in rows)
    assert len(list(tmp_path.glob("geometry_*.csv"))) == 3


def test_pressure_file_input(specs, tmp_path):
    (tmp_path / "p.csv").write_text("capture_id,a1,a2\nlow,10,0\nhigh,200,0\n")
    assert run("simulate", "--spec", specs / "planar_101.json", "--pressures", tmp_path / "p.csv",
               "--out", tmp_path / "o", "--quiet") == 0
    assert [r["capture_id"] for r in read_report(tmp_path / "o")] == ["low", "high"]


def test_out_of_range_pressure_is_user_error(specs, tmp_path, capsys):
    assert run("simulate", "--spec", specs / "planar_101.json", "--sweep", "a1=0:400:3",
               "--out", tmp_path) == 1
    err = capsys.readouterr().err
    assert "400000" in err and "a1" in err


@pytest.mark.parametrize("argv", [
    ["simulate", "--bogus"],
    ["simulate", "--spec", "x.json", "--sweep", "a9=1"],
    ["simulate", "--sweep", "a1=1"],
    ["nonsense"],
    [],
])
def test_user_errors_exit_1(argv, tmp_path, specs):
    argv = [str(specs / "planar_101.json") if a == "x.json" else a for a in argv]
    assert run(*argv, *(["--out", tmp_path] if argv[:1] == ["simulate"] and "--bogus" not in argv else [])) == 1


def test_sweep_parsing():
    labels = ["a1", "a2", "a3"]
    np.testing.assert_array_equal(cli.parse_sweep("a1=0:10:3,a3=5", labels),
                                  [[0, 0, 5], [5, 0, 5], [10, 0, 5]])
    np.testing.assert_array_equal(cli.parse_sweep("a2=1/2", labels), [[0, 1, 0], [0, 2, 0]])
    for bad in ("a1=0:1:2,a2=0:1:3", "a1", "a1=0:1", "a1=x", "a1=1,a1=2", "a1=0:1:0"):
        with pytest.raises(cli.UserError):
            cli.parse_sweep(bad, labels)


def test_overflowing_stiffness_is_numerical_failure(tmp_path):
    doc = json.loads((SPECS / "radial_80.json").read_text())
    doc["stiffness"]["k_gamma"] = 1e308
    (tmp_path / "s.json").write_text(json.dumps(doc))
    assert run("simulate", "--spec", tmp_path / "s.json", "--sweep", "a1=0", "--out", tmp_path / "o",
               "--quiet") == 2
    case = json.loads((tmp_path / "o" / "failure_case.json").read_text())
    assert case["command"] == "simulate" and "--spec" in case["argv"]


def contraction_csv(path, q_kpa):
    q = np.asarray(q_kpa, float)
    io.write_csv([{"pressure_kpa": a, "length_mm": b * 1e3} for a, b in zip(q, ct.synthetic_length(q * 1e3))],
                 path)


def test_fit_contraction(tmp_path):
    contraction_csv(tmp_path / "c.csv", np.linspace(0, 380, 15))
    assert run("fit-contraction", "--csv", tmp_path / "c.csv", "--out", tmp_path, "--quiet") == 0
    doc = json.loads((tmp_path / "contraction.json").read_text())
    assert doc["degree"] == 5 and doc["range_kpa"] == [0.0, 380.0] and doc["samples"] == 15
    model = io.contraction_from_dict(doc)
    assert model.evaluate(200e3) == pytest.approx(float(ct.synthetic_length(200e3)), abs=1e-12)


def test_fit_contraction_errors(tmp_path):
    contraction_csv(tmp_path / "few.csv", [0, 100, 200])
    assert run("fit-contraction", "--csv", tmp_path / "few.csv", "--out", tmp_path / "a", "--quiet") == 1
    contraction_csv(tmp_path / "dup.csv", [0, 0, 0, 0, 0, 100])
    assert run("fit-contraction", "--csv", tmp_path / "dup.csv", "--out", tmp_path / "b", "--quiet") == 2
    assert (tmp_path / "b" / "failure_case.json").exists()


def helical_markers(tmp_path, pressures_kpa, captures=2, sigma=0.0, hints=True, seed=0):
    design = io.load_spec(SPECS / "helical_80.json")
    rng = np.random.default_rng(seed)
    s = np.linspace(1 / 8, 1, 8)
    obs, prow, xis = [], [], {}
    for p in pressures_kpa:
        vec = np.array([p, 0.0, 0.0])
        xi = equilibrium(design, vec * 1e3)
        for c in range(captures):
            cid = f"q{p:g}_{c}"
            xis[cid] = xi
            pts = lg.positions(xi, s) + rng.normal(scale=sigma, size=(8, 3))
            obs += [MarkerObservation(tuple(pt), float(si) if hints else None, cid, f"m{k}")
                    for k, (si, pt) in enumerate(zip(s, pts))]
            prow.append({"capture_id": cid, "a1": p, "a2": 0.0, "a3": 0.0})
    io.write_markers(obs, tmp_path / "markers.csv")
    io.write_csv(prow, tmp_path / "pressures.csv")
    return xis


def test_fit_shape_median_over_captures(tmp_path):
    xis = helical_markers(tmp_path, [241.0], captures=3)
    assert run("fit-shape", "--markers", tmp_path / "markers.csv", "--out", tmp_path, "--quiet") == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["aggregated"] and len(doc["captures"]) == 3 and doc["s_mode"] == "hinted"
    got = np.array(list(doc["median"]["xi"].values()))
    np.testing.assert_allclose(got, xis["q241_0"], atol=1e-7)


def test_fit_shape_without_hints_reports_projection(tmp_path):
    (tmp_path / "m").mkdir()
    helical_markers(tmp_path / "m", [345.0], captures=1, hints=False)
    text = (tmp_path / "m" / "markers.csv").read_text().splitlines()
    stripped = [",".join(c for i, c in enumerate(line.split(",")) if i != 2) for line in text]
    (tmp_path / "nohint.csv").write_text("\n".join(stripped) + "\n")
    assert run("fit-shape", "--markers", tmp_path / "nohint.csv", "--out", tmp_path, "--quiet") == 0
    doc = json.loads((tmp_path / "fit.json").read_text())
    assert doc["s_mode"] == "projected" and not doc["s_hint_column"]


def test_fit_shape_bad_init(tmp_path):
    helical_markers(tmp_path, [100.0], captures=1)
    assert run("fit-shape", "--markers", tmp_path / "markers.csv", "--init", "1,2", "--out", tmp_path) == 1


def test_compare_model_against_itself(tmp_path, specs):
    helical_markers(tmp_path, [103.0, 345.0], captures=2)
    assert run("compare", "--spec", specs / "helical_80.json", "--markers", tmp_path / "markers.csv",
               "--pressures", tmp_path / "pressures.csv", "--out", tmp_path / "o", "--quiet") == 0
    rows = json.loads((tmp_path / "o" / "accuracy.json").read_text())["rows"]
    assert [r["captures"] for r in rows] == ["q103_0;q103_1", "q345_0;q345_1"]
    for r in rows:
        assert r["tip_error_normalized"] < 1e-8
        assert r["winding_radius_error"] < 1e-7 and r["pitch_error"] < 1e-7
        assert max(abs(r[k]) for k in ("curvature_error_w_x", "curvature_error_w_y", "curvature_error_w_z")) < 1e-6


def test_compare_misaligned_names_capture(tmp_path, specs, capsys):
    helical_markers(tmp_path, [103.0], captures=1)
    (tmp_path / "pressures.csv").write_text("capture_id,a1,a2,a3\nother,103,0,0\n")
    assert run("compare", "--spec", specs / "helical_80.json", "--markers", tmp_path / "markers.csv",
               "--pressures", tmp_path / "pressures.csv", "--out", tmp_path / "o") == 1
    assert "q103_0" in capsys.readouterr().err


def test_validate_pass_and_negative_control(tmp_path):
    assert run("validate", "--quick", "--out", tmp_path / "ok", "--quiet") == 0
    summary = json.loads((tmp_path / "ok" / "validation.json").read_text())
    assert all(c["passed"] for c in summary["checks"]) and summary["seed"] == 42
    assert run("validate", "--quick", "--perturb-k", "1e-6", "--out", tmp_path / "bad", "--quiet") == 2
    case = json.loads((tmp_path / "bad" / "failure_case.json").read_text())
    assert list(case["failures"]) == ["planar_regression"]


def test_console_script_help():
    exe = shutil.which("twistrod")
    cmd = [exe] if exe else [sys.executable, "-m", "twistrod.cli"]
    res = subprocess.run([*cmd, "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for sub in ("simulate", "fit-contraction", "fit-shape", "compare", "validate"):
        assert sub in res.stdout
