"""``twistrod`` command line.

Exit codes: 0 success, 1 user error (bad flags, files, out-of-range inputs),
2 numerical failure.  Numerical failures also write ``failure_case.json`` to
the output directory so the run can be replayed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import contraction as ct
from . import crosssection as cs
from . import fitting as ft
from . import io
from . import liegroup as lg
from . import rod
from . import validation
from .mechanics import ArityError, NumericalError, assemble, solve_equilibrium

EXIT_OK, EXIT_USER, EXIT_NUMERIC = 0, 1, 2
DEFAULT_OUT = "twistrod_out"


class UserError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, message: str, case: dict | None = None):
        super().__init__(message)
        self.case = case or {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def twist_names(group: lg.Group) -> list[str]:
    return ["v_x", "v_y", "w_z"] if group is lg.Group.SE2 else ["v_x", "v_y", "v_z", "w_x", "w_y", "w_z"]


def _twist_dict(xi, group) -> dict:
    return dict(zip(twist_names(group), [float(v) for v in xi]))


def _pad3(p) -> list[float]:
    p = [float(v) for v in p]
    return p + [0.0] * (3 - len(p))


def parse_sweep(text: str, labels: list[str]) -> np.ndarray:
    """Pressure vectors (kPa) from ``"a1=0:345:8,a2=0"``.

    Each entry is ``start:stop:count`` (inclusive), a ``/``-separated list, or
    a constant.  Ranged entries must agree in length and are zipped; constants
    and unnamed actuators (0 kPa) are broadcast.
    """
    columns: dict[str, np.ndarray] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, eq, value = part.partition("=")
        name = name.strip()
        if not eq or name not in labels:
            raise UserError(f"sweep entry {part!r}: expected <actuator>=<values> with actuator in {labels}")
        if name in columns:
            raise UserError(f"sweep names actuator {name!r} twice")
        try:
            if ":" in value:
                start, stop, count = value.split(":")
                n = int(count)
                if n < 1:
                    raise ValueError("count must be >= 1")
                columns[name] = np.linspace(float(start), float(stop), n)
            else:
                columns[name] = np.array([float(v) for v in value.split("/")])
        except ValueError as err:
            raise UserError(f"sweep entry {part!r}: {err}") from None
        if not np.all(np.isfinite(columns[name])):
            raise UserError(f"sweep entry {part!r}: values must be finite")
    sizes = {c.size for c in columns.values() if c.size > 1}
    if len(sizes) > 1:
        raise UserError(f"sweep ranges differ in length: {sorted(sizes)}")
    n = sizes.pop() if sizes else 1
    out = np.zeros((n, len(labels)))
    for j, lab in enumerate(labels):
        if lab in columns:
            out[:, j] = columns[lab]
    return out


def _lengths(design: cs.ManipulatorDesign, pressures_pa: np.ndarray) -> np.ndarray:
    if design.contraction is None:
        raise UserError("spec has no contraction model")
    out = []
    for lab, q in zip(design.labels, pressures_pa):
        try:
            out.append(design.contraction.evaluate(q))
        except ct.ExtrapolationError as err:
            raise UserError(f"actuator {lab}: {err}") from None
        except ct.ModelValidityError as err:
            raise NumericFailure(f"actuator {lab}: {err}", {"pressure_pa": float(q)}) from None
    return np.array(out)


def _out_dir(args) -> Path:
    out = Path(args.out or DEFAULT_OUT)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise UserError(f"cannot create output directory {out}: {err.strerror}") from None
    return out


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _require(args, name: str):
    value = getattr(args, name)
    if value is None:
        raise UserError(f"--{name.replace('_', '-')} is required for {args.command}")
    return value


# --------------------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    design = io.load_spec(_require(args, "spec"))
    if (args.sweep is None) == (args.pressures is None):
        raise UserError("give exactly one of --sweep or --pressures")
    if args.sweep is not None:
        ids = None
        kpa = parse_sweep(args.sweep, design.labels)
    else:
        table = io.read_pressures(args.pressures, design.labels)
        ids = list(table)
        kpa = np.array([table[c] for c in ids]) * 1e-3
    out = _out_dir(args)
    system = assemble(design)
    if system.rank < design.group.dof:
        _say(args, f"note: equilibrium system has rank {system.rank} < {design.group.dof}; "
                   "minimum-norm solution reported")
    rows, geometry = [], []
    names = twist_names(design.group)
    for i, q in enumerate(kpa):
        l = _lengths(design, q * 1e3)
        try:
            xi = solve_equilibrium(system, l)
        except NumericalError as err:
            raise NumericFailure(str(err), {"pressures_kpa": q.tolist(), "lengths_m": l.tolist()}) from None
        state = rod.RodState(xi, rod.neutral_twist(float(np.mean(l)), design.group))
        poses = rod.sample_poses(state, args.samples)
        name = f"geometry_{i:03d}.csv"
        io.write_geometry(poses, out / name)
        geometry.append(name)
        tip = _pad3(poses[-1][1].translation)
        _, w = ft._split(xi)
        row = {"index": i, "capture_id": ids[i] if ids else ""}
        row.update({f"{lab}_kpa": float(v) for lab, v in zip(design.labels, q)})
        row.update({f"{lab}_length_m": float(v) for lab, v in zip(design.labels, l)})
        row.update(_twist_dict(xi, design.group))
        row.update({"curvature_norm": float(np.linalg.norm(w)), "tip_x_m": tip[0], "tip_y_m": tip[1],
                    "tip_z_m": tip[2], "geometry": name})
        if args.actuators:
            for j, lab in enumerate(design.labels):
                s = np.linspace(0.0, 1.0, args.samples)
                curve = [(float(sj), cs.actuator_curve(design, j, xi, sj)) for sj in s]
                io.write_geometry(curve, out / f"geometry_{i:03d}_{lab}.csv")
        rows.append(row)
    fields = (["index", "capture_id"] + [f"{lab}_kpa" for lab in design.labels]
              + [f"{lab}_length_m" for lab in design.labels] + names
              + ["curvature_norm", "tip_x_m", "tip_y_m", "tip_z_m", "geometry"])
    io.write_csv(rows, out / "report.csv", fields)
    io.write_json({"design": io.design_to_dict(design), "rank": system.rank,
                   "samples": args.samples, "rows": rows}, out / "report.json")
    _say(args, f"simulated {len(rows)} pressure vector(s) -> {out / 'report.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------- fit-contraction

def cmd_fit_contraction(args) -> int:
    samples = io.read_contraction_csv(_require(args, "csv"))
    try:
        model = ct.fit(samples, args.degree)
    except ct.ContractionFitError as err:
        if err.condition is None or len(samples) < args.degree + 1:
            raise UserError(str(err)) from None
        raise NumericFailure(str(err), {"degree": args.degree,
                                        "samples": [[s.pressure, s.length] for s in samples]}) from None
    out = _out_dir(args)
    doc = io.contraction_to_dict(model)
    doc["samples"] = len(samples)
    io.write_json(doc, out / "contraction.json")
    _say(args, f"degree {model.degree} fit over {len(samples)} samples, "
               f"rms residual {model.residual_rms * 1e3:.4g} mm -> {out / 'contraction.json'}")
    return EXIT_OK


# --------------------------------------------------------------------------- fit-shape

def _parse_init(text: str | None, group: lg.Group):
    if text is None:
        return None
    try:
        xi = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UserError(f"--init must be comma-separated numbers, got {text!r}") from None
    if xi.size != group.dof:
        raise UserError(f"--init needs {group.dof} values for {group.value}, got {xi.size}")
    return xi


def _fit_captures(captures: dict, group, init, free_base: bool):
    fits = {}
    for cid, obs in captures.items():
        try:
            fits[cid] = ft.fit_twist(obs, init, group=group, free_base=free_base)
        except ft.UnderdeterminedError as err:
            raise UserError(f"capture {cid!r}: {err}") from None
    return fits


def _aggregate(fits: dict, label: str):
    try:
        return ft.median_aggregate(list(fits.values()))
    except ft.AggregationError as err:
        raise NumericFailure(f"{label}: {err}", {"captures": {
            c: {"xi": f.xi_fit.tolist(), "rms": f.residual_rms} for c, f in fits.items()}}) from None


def _fit_dict(fit: ft.FitResult, group) -> dict:
    return {"xi": _twist_dict(fit.xi_fit, group), "residual_rms_m": fit.residual_rms,
            "converged": fit.converged, "ill_conditioned": fit.ill_conditioned,
            "iterations": fit.iterations, "restarts": fit.restarts, "s_mode": fit.s_mode,
            "s_values": [float(v) for v in fit.s_values],
            "base_translation_m": _pad3(fit.base_pose_fit.translation),
            "base_quaternion": io.rotation_quaternion(fit.base_pose_fit.rotation).tolist()}


def cmd_fit_shape(args) -> int:
    group = io.load_spec(args.spec).group if args.spec else lg.Group(args.group)
    captures, has_hint = io.read_markers(_require(args, "markers"))
    if not captures:
        raise UserError(f"{args.markers}: no marker rows")
    init = _parse_init(args.init, group)
    fits = _fit_captures(captures, group, init, args.free_base)
    agg = _aggregate(fits, "fit-shape")
    out = _out_dir(args)
    doc = {"group": group.value, "s_hint_column": has_hint,
           "s_mode": "projected" if any(f.s_mode == "projected" for f in fits.values()) else "hinted",
           "captures": {c: _fit_dict(f, group) for c, f in fits.items()},
           "median": _fit_dict(agg, group), "aggregated": len(fits) > 1}
    io.write_json(doc, out / "fit.json")
    for c, f in fits.items():
        if not f.converged:
            _say(args, f"warning: capture {c!r} did not converge; excluded from the median")
    _say(args, f"fit {len(fits)} capture(s) ({doc['s_mode']} arc parameters), "
               f"median rms {agg.residual_rms:.4g} m -> {out / 'fit.json'}")
    return EXIT_OK


# --------------------------------------------------------------------------- compare

def cmd_compare(args) -> int:
    design = io.load_spec(_require(args, "spec"))
    captures, _ = io.read_markers(_require(args, "markers"))
    pressures = io.read_pressures(_require(args, "pressures"), design.labels)
    for cid in captures:
        if cid not in pressures:
            raise UserError(f"capture {cid!r} has markers but no pressure record")
    for cid in pressures:
        if cid not in captures:
            raise UserError(f"capture {cid!r} has a pressure record but no markers")
    if design.contraction is None:
        raise UserError("spec has no contraction model")
    arm_length = design.contraction.evaluate(design.contraction.input_range[0])
    groups: dict[tuple, list[str]] = {}
    for cid in captures:
        groups.setdefault(tuple(np.round(pressures[cid], 6)), []).append(cid)
    system = assemble(design)
    helical = design.kind == "helical"
    rows = []
    for key, cids in groups.items():
        q = np.array(key)
        l = _lengths(design, q)
        try:
            xi_model = solve_equilibrium(system, l)
        except NumericalError as err:
            raise NumericFailure(str(err), {"pressures_pa": q.tolist()}) from None
        fits = _fit_captures({c: captures[c] for c in cids}, design.group, xi_model, False)
        agg = _aggregate(fits, f"captures {cids}")
        model_tip = lg.exp(xi_model).translation
        measured_tip = (agg.base_pose_fit @ lg.exp(agg.xi_fit)).translation
        try:
            rep = ft.accuracy(xi_model, agg.xi_fit, model_tip, measured_tip, arm_length, helical)
        except ft.DegenerateHelixError as err:
            raise NumericFailure(f"captures {cids}: {err}", {"xi_model": xi_model.tolist(),
                                                             "xi_measured": agg.xi_fit.tolist()}) from None
        row = {"captures": ";".join(cids)}
        row.update({f"{lab}_kpa": float(v) * 1e-3 for lab, v in zip(design.labels, q)})
        names = ["w_z"] if design.group is lg.Group.SE2 else ["w_x", "w_y", "w_z"]
        row.update({f"curvature_error_{n}": float(v) for n, v in zip(names, rep.scaled_curvature_error)})
        row["tip_error_normalized"] = rep.tip_error_normalized
        if helical:
            row["winding_radius_error"] = rep.winding_radius_error
            row["pitch_error"] = rep.pitch_error
        row["residual_rms_m"] = agg.residual_rms
        rows.append(row)
    out = _out_dir(args)
    io.write_csv(rows, out / "accuracy.csv")
    io.write_json({"arm_length_m": arm_length, "design": io.design_to_dict(design), "rows": rows},
                  out / "accuracy.json")
    _say(args, f"compared {len(rows)} pressure group(s) -> {out / 'accuracy.csv'}")
    return EXIT_OK


# --------------------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    checks = validation.run_all(args.seed, perturb_k=args.perturb_k, full=not args.quick)
    for c in checks:
        _say(args, c.line())
    failed = [c for c in checks if not c.passed]
    if args.out is not None or failed:
        out = _out_dir(args)
        io.write_json(_jsonable({"seed": args.seed, "perturb_k": args.perturb_k,
                                 "checks": [{"name": c.name, "passed": c.passed, "value": c.value,
                                             "threshold": c.threshold} for c in checks]}),
                      out / "validation.json")
    if failed:
        raise NumericFailure(f"{len(failed)} check(s) failed: {', '.join(c.name for c in failed)}",
                             {"seed": args.seed, "perturb_k": args.perturb_k,
                              "failures": {c.name: c.case for c in failed}})
    _say(args, f"all {len(checks)} checks passed")
    return EXIT_OK


# --------------------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--spec", help="manipulator JSON spec")
    common.add_argument("--out", help=f"output directory (default {DEFAULT_OUT})")
    common.add_argument("--seed", type=int, default=validation.DEFAULT_SEED)
    common.add_argument("--quiet", action="store_true")

    p = _Parser(prog="twistrod", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="equilibrium shapes for pressure inputs")
    s.add_argument("--sweep", help='e.g. "a1=0:345:8,a2=0" (kPa; start:stop:count, a/b/c or constant)')
    s.add_argument("--pressures", help="CSV with capture_id and one kPa column per actuator label")
    s.add_argument("--samples", type=int, default=rod.DEFAULT_SAMPLES, help="geometry points per shape")
    s.add_argument("--actuators", action="store_true", help="also write each actuator's curve")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("fit-contraction", parents=[common], help="polynomial free-contraction model")
    c.add_argument("--csv", help="CSV with pressure_kpa, length_mm")
    c.add_argument("--degree", type=int, default=ct.DEFAULT_DEGREE)
    c.set_defaults(func=cmd_fit_contraction)

    f = sub.add_parser("fit-shape", parents=[common], help="fit a constant twist to markers")
    f.add_argument("--markers", help="marker CSV (capture_id, marker_id, [s_hint], x_m, y_m, z_m)")
    f.add_argument("--init", help="comma-separated initial twist")
    f.add_argument("--group", choices=["SE2", "SE3"], default="SE3", help="ignored when --spec is given")
    f.add_argument("--free-base", action="store_true", help="also fit the base pose")
    f.set_defaults(func=cmd_fit_shape)

    m = sub.add_parser("compare", parents=[common], help="model vs. measured accuracy per pressure")
    m.add_argument("--markers")
    m.add_argument("--pressures")
    m.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", parents=[common], help="run the oracle and invariant checks")
    v.add_argument("--perturb-k", type=float, default=0.0,
                   help="relative stiffness error injected into the analytic planar regression")
    v.add_argument("--quick", action="store_true", help="skip the 100-trial noisy fit study")
    v.set_defaults(func=cmd_validate)
    return p


def _fail(args, err: NumericFailure) -> None:
    case = {"command": args.command, "argv": getattr(args, "argv", []), "error": str(err), **err.case}
    try:
        out = _out_dir(args)
        io.write_json(_jsonable(case), out / "failure_case.json")
        print(f"replay case written to {out / 'failure_case.json'}", file=sys.stderr)
    except (UserError, OSError) as write_err:
        print(f"could not write replay case: {write_err}", file=sys.stderr)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except NumericFailure as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        _fail(args, err)
        return EXIT_NUMERIC
    except (NumericalError, lg.BranchError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        _fail(args, NumericFailure(str(err)))
        return EXIT_NUMERIC
    except (UserError, io.SpecError, io.DataFileError, ct.ExtrapolationError, ArityError,
            cs.InvalidGeometryError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
