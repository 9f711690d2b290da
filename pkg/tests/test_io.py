import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twistrod import contraction as ct
from twistrod import crosssection as cs
from twistrod import io
from twistrod import liegroup as lg
from twistrod.fitting import MarkerObservation
from twistrod.mechanics import StiffnessMatrix, assemble, nominal_stiffness

SPEC = {"group": "SE3", "design": {"kind": "helical", "diameter_mm": 80, "count": 3, "tilt_deg": 15},
        "stiffness": {"k_eps": 1, "k_gamma": 10, "k_tau": 0, "k_kappa_bar": 1e-4},
        "contraction": {"coefficients": [0.4, -0.05], "range_kpa": [0, 380]}}


def write(tmp_path, obj, name="spec.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


def test_load_helical_spec(tmp_path):
    d = io.load_spec(write(tmp_path, SPEC))
    assert d.kind == "helical" and d.params["tilt_rad"] == pytest.approx(math.radians(15))
    assert d.params["diameter_m"] == pytest.approx(0.08)
    np.testing.assert_allclose(d.stiffness.diagonal, [1, 10, 10, 0, 1e-4, 1e-4])
    assert d.contraction.input_range == (0.0, 380e3)


def test_parse_error_reports_position(tmp_path):
    with pytest.raises(io.SpecParseError) as err:
        io.load_spec(write(tmp_path, '{\n  "group": "SE3",\n  oops\n}'))
    assert (err.value.line, err.value.column) == (3, 3)


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d.pop("stiffness"), "<root>"),
    (lambda d: d["design"].update(tilt_deg="x"), "design.tilt_deg"),
    (lambda d: d["design"].update(extra=1), "design"),
    (lambda d: d.update(group="SE4"), "group"),
    (lambda d: d["stiffness"].update(k_eps=float("nan")), "stiffness.k_eps"),
])
def test_schema_errors_name_field(tmp_path, mutate, field):
    doc = json.loads(json.dumps(SPEC))
    mutate(doc)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(io.SpecSchemaError) as err:
        io.load_spec(p)
    assert err.value.field == field


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(group="SE2"),
    lambda d: d["stiffness"].update(k_eps=-1),
    lambda d: d["design"].update(count=1, tilt_deg=0),
    lambda d: d["contraction"].update(range_kpa=[5, 5]),
])
def test_semantic_errors(tmp_path, mutate):
    doc = json.loads(json.dumps(SPEC))
    mutate(doc)
    with pytest.raises(io.SpecSemanticError):
        io.load_spec(write(tmp_path, doc))


def test_missing_file():
    with pytest.raises(io.SpecError):
        io.load_spec("/nonexistent/spec.json")


DESIGNS = [cs.planar_design(0.1016, nominal_stiffness(1e-4, "SE2"), ct.synthetic_model()),
           cs.radial_design(0.08, 4, StiffnessMatrix(2.0, 10.0, 0.1, 3e-4), None, 0.3),
           cs.helical_design(0.11, 3, -0.3, nominal_stiffness(5e-4), ct.synthetic_model()),
           cs.explicit_design([lg.translation(0, 0.01, 0.02), lg.exp(np.array([0, 0.03, 0, 0.4, 0.0, 0.2]))],
                              ["m", "n"], nominal_stiffness(1e-4))]


@pytest.mark.parametrize("design", DESIGNS, ids=lambda d: d.kind)
def test_spec_roundtrip(tmp_path, design):
    p = tmp_path / "d.json"
    io.save_spec(design, p)
    text = p.read_text()
    again = io.load_spec(p)
    np.testing.assert_allclose(assemble(again).A, assemble(design).A, rtol=1e-11, atol=1e-15)
    assert again.labels == design.labels
    io.save_spec(again, p)
    assert p.read_text() == text


def test_explicit_mount_rotation_spec(tmp_path):
    doc = {"group": "SE2", "design": {"kind": "explicit", "mounts": [
        {"label": "l", "translation_m": [0, 0.02], "rotation": [0, 0, 1, 0.5]},
        {"translation_m": [0, -0.02], "rotation": [0, 0, -1, 0.5]}]},
        "stiffness": {"k_eps": 1, "k_gamma": 10, "k_tau": 0, "k_kappa_bar": 1e-4}}
    d = io.load_spec(write(tmp_path, doc))
    assert d.labels == ["l", "a2"]
    np.testing.assert_allclose(d.mounts[1].transform.rotation, lg.rot2(-0.5))
    doc["design"]["mounts"][0]["rotation"] = [1, 0, 0, 0.5]
    with pytest.raises(io.SpecSemanticError):
        io.load_spec(write(tmp_path, doc))


def test_canonical_json_is_sorted_and_stable():
    assert io.canonical_text('{"b": 1, "a": [1, 2]}') == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_floats(x):
    assert float(io.fmt(x)) == x


def test_geometry_roundtrip(tmp_path):
    xi = np.array([0.44, 0.0, 0.01, 0.5, -0.3, 1.0])
    poses = [(s, lg.exp(xi, s)) for s in np.linspace(0, 1, 7)]
    io.write_geometry(poses, tmp_path / "g.csv")
    s, p, q = io.read_geometry(tmp_path / "g.csv")
    np.testing.assert_array_equal(s, np.linspace(0, 1, 7))
    np.testing.assert_array_equal(p, [g.translation for _, g in poses])
    assert np.all(q[:, 0] >= 0)
    np.testing.assert_allclose(np.linalg.norm(q, axis=1), 1.0)


def test_quaternion_convention():
    np.testing.assert_allclose(io.rotation_quaternion(lg.axis_angle([0, 0, 1], math.pi / 2)),
                               [math.sqrt(0.5), 0, 0, math.sqrt(0.5)])
    np.testing.assert_allclose(io.rotation_quaternion(lg.rot2(-math.pi / 2)),
                               [math.sqrt(0.5), 0, 0, -math.sqrt(0.5)])


def test_markers_roundtrip(tmp_path):
    obs = [MarkerObservation((0.1, 0.2, 0.3), 0.5, "c1", "m0"), MarkerObservation((0.4, 0.5, 0.6), None, "c2", "m1")]
    io.write_markers(obs, tmp_path / "m.csv")
    back, has_hint = io.read_markers(tmp_path / "m.csv")
    assert has_hint and list(back) == ["c1", "c2"]
    assert back["c1"][0] == obs[0] and back["c2"][0] == obs[1]


def test_markers_without_hint_column(tmp_path):
    (tmp_path / "m.csv").write_text("capture_id,marker_id,x_m,y_m,z_m\nc,m,1,2,3\n")
    back, has_hint = io.read_markers(tmp_path / "m.csv")
    assert not has_hint and back["c"][0].s_hint is None


def test_bad_data_files(tmp_path):
    (tmp_path / "c.csv").write_text("pressure_kpa,length_mm\n0,460\n10,abc\n")
    with pytest.raises(io.DataFileError, match=":3: field 'length_mm'"):
        io.read_contraction_csv(tmp_path / "c.csv")
    (tmp_path / "c.csv").write_text("pressure_kpa\n0\n")
    with pytest.raises(io.DataFileError, match="missing column"):
        io.read_contraction_csv(tmp_path / "c.csv")
    (tmp_path / "p.csv").write_text("capture_id,a1\nx,1\nx,2\n")
    with pytest.raises(io.DataFileError, match="duplicate"):
        io.read_pressures(tmp_path / "p.csv", ["a1"])
    with pytest.raises(io.DataFileError):
        io.read_markers(tmp_path / "missing.csv")


def test_contraction_csv_units_and_model_dict(tmp_path):
    (tmp_path / "c.csv").write_text("pressure_kpa,length_mm\n100,450\n")
    (s,) = io.read_contraction_csv(tmp_path / "c.csv")
    assert (s.pressure, s.length) == (100e3, 0.45)
    m = ct.synthetic_model()
    back = io.contraction_from_dict(json.loads(json.dumps(io.contraction_to_dict(m))))
    np.testing.assert_array_equal(back.coefficients, m.coefficients)
    assert back.input_range == m.input_range
