"""File formats: manipulator JSON, contraction/marker/pressure CSVs, reports.

Internal quantities are SI.  Files use suffixed field names (``_mm``,
``_kpa``, ``_deg``, ``_m``) and are converted at the boundary.  Writers are
deterministic: JSON uses sorted keys, CSV floats use 17 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np
from scipy.spatial.transform import Rotation

from . import crosssection as cs
from . import liegroup as lg
from .contraction import ContractionModel, ContractionSample
from .fitting import MarkerObservation
from .liegroup import Group, Pose
from .mechanics import StiffnessMatrix


class SpecError(ValueError):
    pass


class SpecParseError(SpecError):
    def __init__(self, path, err: json.JSONDecodeError):
        super().__init__(f"{path}: JSON parse error at line {err.lineno}, column {err.colno}: {err.msg}")
        self.line, self.column = err.lineno, err.colno


class SpecSchemaError(SpecError):
    def __init__(self, path, field: str, message: str):
        super().__init__(f"{path}: invalid field '{field}': {message}")
        self.field = field


class SpecSemanticError(SpecError):
    pass


class DataFileError(ValueError):
    pass


_num = {"type": "number"}
_vec = {"type": "array", "items": _num}

SPEC_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["group", "design", "stiffness"],
    "additionalProperties": False,
    "properties": {
        "group": {"enum": ["SE2", "SE3"]},
        "design": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["planar", "radial", "helical", "explicit"]}},
            "allOf": [
                {"if": {"properties": {"kind": {"const": "planar"}}},
                 "then": {"required": ["width_mm"], "additionalProperties": False,
                          "properties": {"kind": {}, "width_mm": _num}}},
                {"if": {"properties": {"kind": {"const": "radial"}}},
                 "then": {"required": ["diameter_mm", "count"], "additionalProperties": False,
                          "properties": {"kind": {}, "diameter_mm": _num,
                                         "count": {"type": "integer"}, "phase_deg": _num}}},
                {"if": {"properties": {"kind": {"const": "helical"}}},
                 "then": {"required": ["diameter_mm", "count", "tilt_deg"],
                          "additionalProperties": False,
                          "properties": {"kind": {}, "diameter_mm": _num,
                                         "count": {"type": "integer"}, "tilt_deg": _num,
                                         "phase_deg": _num}}},
                {"if": {"properties": {"kind": {"const": "explicit"}}},
                 "then": {"required": ["mounts"], "additionalProperties": False,
                          "properties": {"kind": {}, "mounts": {
                              "type": "array", "minItems": 1,
                              "items": {"type": "object",
                                        "required": ["translation_m", "rotation"],
                                        "additionalProperties": False,
                                        "properties": {
                                            "label": {"type": "string"},
                                            "translation_m": {**_vec, "minItems": 2, "maxItems": 3},
                                            "rotation": {**_vec, "minItems": 4, "maxItems": 4}}}}}}},
            ],
        },
        "stiffness": {
            "type": "object",
            "required": ["k_eps", "k_gamma", "k_tau", "k_kappa_bar"],
            "additionalProperties": False,
            "properties": {"k_eps": _num, "k_gamma": _num, "k_tau": _num,
                           "k_kappa_bar": _num, "k_kappa_y_bar": _num},
        },
        "contraction": {
            "type": "object",
            "required": ["coefficients", "range_kpa"],
            "additionalProperties": False,
            "properties": {"coefficients": {**_vec, "minItems": 1},
                           "range_kpa": {**_vec, "minItems": 2, "maxItems": 2}},
        },
    },
}


def _clean(x: float) -> float:
    """Round a unit-converted value to 12 significant digits (stable round trips)."""
    return float(f"{x:.12g}")


def _find_nonfinite(obj, path="") -> str | None:
    if isinstance(obj, float) and not math.isfinite(obj):
        return path or "<root>"
    if isinstance(obj, dict):
        for k, v in obj.items():
            hit = _find_nonfinite(v, f"{path}.{k}" if path else k)
            if hit:
                return hit
    if isinstance(obj, list):
        for i, v in enumerate(obj):
            hit = _find_nonfinite(v, f"{path}[{i}]")
            if hit:
                return hit
    return None


def parse_spec_text(text: str, source: str = "<spec>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecParseError(source, err) from None
    bad = _find_nonfinite(doc)
    if bad:
        raise SpecSchemaError(source, bad, "value must be finite (NaN/Infinity rejected)")
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        field = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise SpecSchemaError(source, field, e.message)
    return doc


def _mount_pose(group: Group, entry: dict, index: int) -> Pose:
    t = np.asarray(entry["translation_m"], dtype=float)
    ax, ay, az, theta = entry["rotation"]
    if t.size != group.space_dim:
        raise SpecSemanticError(f"mount {index}: translation_m needs {group.space_dim} entries")
    if group is Group.SE2:
        if abs(ax) > 0 or abs(ay) > 0 or (theta != 0 and az == 0):
            raise SpecSemanticError(f"mount {index}: SE2 rotations must be about the z axis")
        angle = theta * (1.0 if az >= 0 else -1.0)
        return Pose.from_rt(lg.rot2(angle), t)
    if theta == 0:
        return Pose.from_rt(np.eye(3), t)
    try:
        R = lg.axis_angle([ax, ay, az], theta)
    except ValueError as err:
        raise SpecSemanticError(f"mount {index}: {err}") from None
    return Pose.from_rt(R, t)


def design_from_dict(doc: dict) -> cs.ManipulatorDesign:
    group = Group(doc["group"])
    st = doc["stiffness"]
    try:
        k_eps = float(st["k_eps"])
        ky = st.get("k_kappa_y_bar")
        stiffness = StiffnessMatrix(k_eps=k_eps, k_gamma=float(st["k_gamma"]),
                                    k_tau=float(st["k_tau"]), k_kappa=float(st["k_kappa_bar"]) * k_eps,
                                    k_kappa_y=None if ky is None else float(ky) * k_eps, group=group)
    except ValueError as err:
        raise SpecSemanticError(f"stiffness: {err}") from None
    contraction = None
    if "contraction" in doc:
        c = doc["contraction"]
        lo, hi = c["range_kpa"]
        try:
            contraction = ContractionModel(np.asarray(c["coefficients"], float), (lo * 1e3, hi * 1e3))
        except ValueError as err:
            raise SpecSemanticError(f"contraction: {err}") from None
    d = doc["design"]
    kind = d["kind"]
    try:
        if kind == "planar":
            if group is not Group.SE2:
                raise SpecSemanticError("planar designs are SE2")
            return cs.planar_design(d["width_mm"] * 1e-3, stiffness, contraction)
        if kind in ("radial", "helical") and group is not Group.SE3:
            raise SpecSemanticError(f"{kind} designs are SE3")
        phase = math.radians(d.get("phase_deg", 0.0))
        if kind == "radial":
            return cs.radial_design(d["diameter_mm"] * 1e-3, d["count"], stiffness, contraction, phase)
        if kind == "helical":
            return cs.helical_design(d["diameter_mm"] * 1e-3, d["count"], math.radians(d["tilt_deg"]),
                                     stiffness, contraction, phase)
        poses = [_mount_pose(group, m, i) for i, m in enumerate(d["mounts"])]
        labels = [m.get("label", f"a{i + 1}") for i, m in enumerate(d["mounts"])]
        design = cs.explicit_design(poses, labels, stiffness, contraction)
        design.params["mounts"] = [dict(m) for m in d["mounts"]]
        return design
    except cs.InvalidGeometryError as err:
        raise SpecSemanticError(f"design: {err}") from None


def load_spec(path) -> cs.ManipulatorDesign:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise SpecError(f"{path}: cannot read spec: {err.strerror}") from None
    return design_from_dict(parse_spec_text(text, str(path)))


def _explicit_mounts(design: cs.ManipulatorDesign) -> list[dict]:
    if "mounts" in design.params:
        return [dict(m) for m in design.params["mounts"]]
    out = []
    for m in design.mounts:
        g = m.transform
        if design.group is Group.SE2:
            theta = math.atan2(g.rotation[1, 0], g.rotation[0, 0])
            rot = [0.0, 0.0, 1.0, theta]
        else:
            rv = Rotation.from_matrix(g.rotation).as_rotvec()
            theta = float(np.linalg.norm(rv))
            rot = [*(rv / theta).tolist(), theta] if theta > 0 else [1.0, 0.0, 0.0, 0.0]
        out.append({"label": m.label, "translation_m": g.translation.tolist(), "rotation": rot})
    return out


def design_to_dict(design: cs.ManipulatorDesign) -> dict:
    p = design.params
    if design.kind == "planar":
        d = {"kind": "planar", "width_mm": _clean(p["width_m"] * 1e3)}
    elif design.kind in ("radial", "helical"):
        d = {"kind": design.kind, "diameter_mm": _clean(p["diameter_m"] * 1e3), "count": p["count"]}
        if design.kind == "helical":
            d["tilt_deg"] = _clean(math.degrees(p["tilt_rad"]))
        if p.get("phase_rad"):
            d["phase_deg"] = _clean(math.degrees(p["phase_rad"]))
    else:
        d = {"kind": "explicit", "mounts": _explicit_mounts(design)}
    k = design.stiffness
    st = {"k_eps": k.k_eps, "k_gamma": k.k_gamma, "k_tau": k.k_tau,
          "k_kappa_bar": _clean(k.k_kappa / k.k_eps)}
    if k.k_kappa_y is not None:
        st["k_kappa_y_bar"] = _clean(k.k_kappa_y / k.k_eps)
    doc = {"group": design.group.value, "design": d, "stiffness": st}
    if design.contraction is not None:
        lo, hi = design.contraction.input_range
        doc["contraction"] = {"coefficients": design.contraction.coefficients.tolist(),
                              "range_kpa": [_clean(lo * 1e-3), _clean(hi * 1e-3)]}
    return doc


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def canonical_text(text: str) -> str:
    return dumps_canonical(json.loads(text))


def save_spec(design: cs.ManipulatorDesign, path) -> None:
    write_text(path, dumps_canonical(design_to_dict(design)))


def write_text(path, text: str) -> None:
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as err:
        raise OSError(err.errno, f"cannot write {path}: {err.strerror}") from None


def write_json(obj, path) -> None:
    write_text(path, dumps_canonical(obj))


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return "" if x is None else str(x)


def write_csv(rows: Sequence[dict], path, fieldnames: Sequence[str] | None = None) -> None:
    fieldnames = list(fieldnames or (rows[0].keys() if rows else []))
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(fieldnames)
            for row in rows:
                w.writerow([fmt(row.get(k)) for k in fieldnames])
    except OSError as err:
        raise OSError(err.errno, f"cannot write {path}: {err.strerror}") from None


def rotation_quaternion(R: np.ndarray) -> np.ndarray:
    """Unit quaternion ``(w, x, y, z)`` with ``w >= 0``; 2x2 rotations are about z."""
    if R.shape == (2, 2):
        theta = math.atan2(R[1, 0], R[0, 0])
        q = np.array([math.cos(theta / 2), 0.0, 0.0, math.sin(theta / 2)])
    else:
        x, y, z, w = Rotation.from_matrix(R).as_quat()
        q = np.array([w, x, y, z])
    q = q / np.linalg.norm(q)
    return -q if q[0] < 0 else q


GEOMETRY_FIELDS = ("s", "x_m", "y_m", "z_m", "qw", "qx", "qy", "qz")


def write_geometry(poses: Iterable[tuple[float, Pose]], path) -> None:
    rows = []
    for s, g in poses:
        p = np.zeros(3)
        p[: g.translation.size] = g.translation
        q = rotation_quaternion(g.rotation)
        rows.append(dict(zip(GEOMETRY_FIELDS, [float(s), *p.tolist(), *q.tolist()])))
    write_csv(rows, path, GEOMETRY_FIELDS)


def _read_rows(path, required: Sequence[str]) -> list[dict]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise DataFileError(f"{path}: missing column(s) {missing}")
            return [dict(r, _line=reader.line_num) for r in reader]
    except OSError as err:
        raise DataFileError(f"{path}: cannot read: {err.strerror}") from None


def _number(path, row: dict, field: str) -> float:
    raw = (row.get(field) or "").strip()
    try:
        val = float(raw)
    except ValueError:
        raise DataFileError(f"{path}:{row['_line']}: field '{field}' is not a number: {raw!r}") from None
    if not math.isfinite(val):
        raise DataFileError(f"{path}:{row['_line']}: field '{field}' must be finite")
    return val


def read_geometry(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns ``(s, positions (n,3), quaternions (n,4))``."""
    rows = _read_rows(path, GEOMETRY_FIELDS)
    data = np.array([[_number(path, r, f) for f in GEOMETRY_FIELDS] for r in rows])
    return data[:, 0], data[:, 1:4], data[:, 4:8]


def read_contraction_csv(path) -> list[ContractionSample]:
    rows = _read_rows(path, ("pressure_kpa", "length_mm"))
    out = []
    for r in rows:
        q, l = _number(path, r, "pressure_kpa") * 1e3, _number(path, r, "length_mm") * 1e-3
        try:
            out.append(ContractionSample(q, l))
        except ValueError as err:
            raise DataFileError(f"{path}:{r['_line']}: {err}") from None
    return out


MARKER_FIELDS = ("capture_id", "marker_id", "s_hint", "x_m", "y_m", "z_m")


def read_markers(path) -> tuple[dict[str, list[MarkerObservation]], bool]:
    """Markers grouped by capture id (file order).  Second value: s_hint column present."""
    path = Path(path)
    rows = _read_rows(path, ("capture_id", "marker_id", "x_m", "y_m", "z_m"))
    has_hint = bool(rows) and "s_hint" in rows[0]
    out: dict[str, list[MarkerObservation]] = {}
    for r in rows:
        hint = None
        if has_hint and (r.get("s_hint") or "").strip():
            hint = _number(path, r, "s_hint")
        pos = tuple(_number(path, r, f) for f in ("x_m", "y_m", "z_m"))
        cid = r["capture_id"].strip()
        out.setdefault(cid, []).append(
            MarkerObservation(pos, hint, cid, r["marker_id"].strip()))
    return out, has_hint


def write_markers(markers: Iterable[MarkerObservation], path) -> None:
    rows = [{"capture_id": m.capture_id, "marker_id": m.marker_id, "s_hint": m.s_hint,
             "x_m": m.position[0], "y_m": m.position[1],
             "z_m": m.position[2] if len(m.position) > 2 else 0.0} for m in markers]
    write_csv(rows, path, MARKER_FIELDS)


def read_pressures(path, labels: Sequence[str]) -> dict[str, np.ndarray]:
    """capture_id -> pressures in Pa ordered by ``labels`` (file columns in kPa)."""
    rows = _read_rows(path, ("capture_id", *labels))
    out = {}
    for r in rows:
        cid = r["capture_id"].strip()
        if cid in out:
            raise DataFileError(f"{path}:{r['_line']}: duplicate capture_id {cid!r}")
        out[cid] = np.array([_number(path, r, lab) * 1e3 for lab in labels])
    return out


def contraction_to_dict(model: ContractionModel) -> dict:
    lo, hi = model.input_range
    return {"coefficients": model.coefficients.tolist(),
            "range_kpa": [_clean(lo * 1e-3), _clean(hi * 1e-3)],
            "degree": model.degree, "residual_rms_m": model.residual_rms,
            "condition": model.condition}


def contraction_from_dict(d: dict) -> ContractionModel:
    lo, hi = d["range_kpa"]
    return ContractionModel(np.asarray(d["coefficients"], float), (lo * 1e3, hi * 1e3),
                            float(d.get("residual_rms_m", 0.0)), float(d.get("condition", 1.0)))
