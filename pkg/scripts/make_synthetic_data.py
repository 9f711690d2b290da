"""Write synthetic contraction, marker and pressure CSVs for trying the CLI.

Markers are sampled from the model's own equilibrium shapes plus Gaussian
noise, so ``twistrod compare`` on them measures noise propagation only.
"""

import argparse
from pathlib import Path

import numpy as np

from twistrod import contraction as ct
from twistrod import io
from twistrod import liegroup as lg
from twistrod.fitting import MarkerObservation
from twistrod.mechanics import equilibrium

EXAMPLES = Path(__file__).resolve().parents[1] / "specs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default=str(EXAMPLES / "helical_80.json"))
    ap.add_argument("--out", default="synthetic_data")
    ap.add_argument("--pressures-kpa", default="103,241,345", help="single-muscle (a1) pressures")
    ap.add_argument("--captures", type=int, default=3, help="captures per pressure")
    ap.add_argument("--markers", type=int, default=8)
    ap.add_argument("--sigma", type=float, default=0.01, help="marker noise std [m]")
    ap.add_argument("--no-hint", action="store_true", help="omit the s_hint column")
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    design = io.load_spec(args.spec)

    q = np.linspace(0.0, ct.MAX_PRESSURE, 15)
    io.write_csv([{"pressure_kpa": p * 1e-3, "length_mm": l * 1e3}
                  for p, l in zip(q, ct.synthetic_length(q))], out / "contraction.csv")

    s = np.linspace(1.0 / args.markers, 1.0, args.markers)
    markers, prows = [], []
    for p in (float(v) for v in args.pressures_kpa.split(",")):
        vec = np.zeros(len(design.labels))
        vec[0] = p
        xi = equilibrium(design, vec * 1e3)
        pts = lg.positions(xi, s)
        for c in range(args.captures):
            cid = f"q{p:g}_c{c}"
            noisy = pts + rng.normal(scale=args.sigma, size=pts.shape)
            for k, (sk, pk) in enumerate(zip(s, noisy)):
                markers.append(MarkerObservation(tuple(pk), None if args.no_hint else float(sk), cid, f"m{k}"))
            prows.append({"capture_id": cid, **{lab: float(v) for lab, v in zip(design.labels, vec)}})
    io.write_markers(markers, out / "markers.csv")
    io.write_csv(prows, out / "pressures.csv", ["capture_id", *design.labels])
    print(f"wrote {len(markers)} markers over {len(prows)} captures to {out}")


if __name__ == "__main__":
    main()
