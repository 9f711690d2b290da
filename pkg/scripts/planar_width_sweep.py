"""Bending angle vs. single-muscle pressure for three planar arm widths.

Prints a table and writes ``planar_width_sweep.csv``.  Uses the synthetic
contraction model unless a fitted ``contraction.json`` is given.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from twistrod import contraction as ct
from twistrod import crosssection as cs
from twistrod import io
from twistrod.mechanics import assemble, nominal_stiffness, solve_equilibrium


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths-mm", default="50.8,76.2,101.6")
    ap.add_argument("--max-kpa", type=float, default=345.0)
    ap.add_argument("--steps", type=int, default=8)
    ap.add_argument("--k-kappa-bar", type=float, default=1e-4)
    ap.add_argument("--contraction", help="contraction.json from `twistrod fit-contraction`")
    ap.add_argument("--out", default="planar_width_sweep.csv")
    args = ap.parse_args()

    model = (io.contraction_from_dict(json.loads(Path(args.contraction).read_text()))
             if args.contraction else ct.synthetic_model())
    widths = [float(w) for w in args.widths_mm.split(",")]
    pressures = np.linspace(0.0, args.max_kpa, args.steps)
    rows = []
    print("q_kpa  " + "  ".join(f"w={w:g}mm" for w in widths))
    for q in pressures:
        l = [model.evaluate(q * 1e3), model.evaluate(0.0)]
        angles = []
        for w in widths:
            design = cs.planar_design(w * 1e-3, nominal_stiffness(args.k_kappa_bar, "SE2"))
            xi = solve_equilibrium(assemble(design), l)
            angles.append(float(np.degrees(xi[2])))
            rows.append({"width_mm": w, "pressure_kpa": q, "bend_deg": angles[-1], "lambda_m": xi[0]})
        print(f"{q:6.1f} " + "  ".join(f"{a:9.2f}" for a in angles))
    io.write_csv(rows, args.out)


if __name__ == "__main__":
    main()
