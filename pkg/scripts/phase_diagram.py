"""Regime map over (alpha/beta, r) with beta fixed, written as CSV plus an SVG heatmap."""

import argparse
import csv
from pathlib import Path

from polarcascade.svg import heatmap
from polarcascade.sweeps import Axis, SweepSpec, phase_sweep, region_components


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--beta", type=float, default=0.3)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--rho", type=float, default=None, help="use the SBM with this homophily")
    ap.add_argument("--out", default="out/phase_diagram")
    args = ap.parse_args()

    fixed = {"beta": args.beta}
    if args.rho is not None:
        fixed.update(homophily=args.rho, topology="sbm")
    spec = SweepSpec([Axis("alpha", 0.05 * args.beta, 1.0, args.steps),
                      Axis("red_fraction", 0.05, 0.95, args.steps)], fixed=fixed)
    res = phase_sweep(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "phase.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha_over_beta", "r_over_1_minus_r", "regime"])
        for c in res.cells:
            r = c.values["red_fraction"]
            w.writerow([c.values["alpha"] / args.beta, r / (1 - r), c.regime])
    heatmap(res.regime_grid(), spec.axes[0].values / args.beta, spec.axes[1].values,
            out / "phase.svg", title=f"regimes, beta={args.beta}",
            xlabel="alpha / beta", ylabel="r")
    print("components:", region_components(res.regime_grid()))
    print("wrote", out)


if __name__ == "__main__":
    main()
