"""Single-muscle inflation of a helical arm at 103, 241 and 345 kPa.

Writes one centerline geometry CSV per pressure plus a summary of torsion,
bending, winding radius and pitch.
"""

import argparse
import math
from pathlib import Path

import numpy as np

from twistrod import contraction as ct
from twistrod import crosssection as cs
from twistrod import fitting as ft
from twistrod import io
from twistrod import rod
from twistrod.mechanics import assemble, nominal_stiffness, solve_equilibrium


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--diameter-mm", type=float, default=50.8)
    ap.add_argument("--tilt-deg", type=float, default=math.degrees(cs.EXAMPLE_TILT))
    ap.add_argument("--pressures-kpa", default="103,241,345")
    ap.add_argument("--k-kappa-bar", type=float, default=1e-4)
    ap.add_argument("--out", default="helical_sweep")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = ct.synthetic_model()
    design = cs.helical_design(args.diameter_mm * 1e-3, 3, math.radians(args.tilt_deg),
                               nominal_stiffness(args.k_kappa_bar), model)
    system = assemble(design)
    rows = []
    for q in (float(p) for p in args.pressures_kpa.split(",")):
        l = np.array([model.evaluate(q * 1e3), model.evaluate(0.0), model.evaluate(0.0)])
        xi = solve_equilibrium(system, l)
        state = rod.RodState(xi, rod.neutral_twist(float(l.mean())))
        io.write_geometry(rod.sample_poses(state, 128), out / f"helix_{q:g}kpa.csv")
        radius, pitch = ft.helix_metrics(xi)
        rows.append({"pressure_kpa": q, "torsion": xi[3], "bend": float(np.linalg.norm(xi[4:])),
                     "winding_radius_m": radius, "pitch_m": pitch})
        print(f"{q:5.0f} kPa  tau {xi[3]:+.3f}  bend {rows[-1]['bend']:.3f}  "
              f"radius {radius * 1e3:.1f} mm  pitch {pitch * 1e3:.1f} mm")
    io.write_csv(rows, out / "summary.csv")


if __name__ == "__main__":
    main()
