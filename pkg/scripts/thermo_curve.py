"""Pressure, entropy and energy of a finite-range potential over a beta grid.

Also checks P'(beta) = -energy by central differences.

    python3 scripts/thermo_curve.py --H 1,2,3,1.5 --out runs/thermo
"""

import argparse
import math
import os

import numpy as np

from thermokms.config import parse_function
from thermokms.gibbs import thermo_table
from thermokms.serialize import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--H", default="1,2,3,1.5")
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--start", type=float, default=-3.0)
    ap.add_argument("--stop", type=float, default=3.0)
    ap.add_argument("--count", type=int, default=61)
    ap.add_argument("--out", default="runs/thermo")
    args = ap.parse_args()
    H = parse_function([float(v) for v in args.H.split(",")], args.k)
    betas = np.linspace(args.start, args.stop, args.count)
    rows = thermo_table(H, betas)
    P = np.array([r[1] for r in rows])
    energy = np.array([r[4] for r in rows])
    dP = np.gradient(P, betas)
    worst = float(np.max(np.abs(dP[1:-1] + energy[1:-1])))
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "thermo.csv"), ["beta", "pressure", "lambda", "entropy", "energy"], rows)
    ent = [r[3] for r in rows]
    print(f"entropy range [{min(ent):.4f}, {max(ent):.4f}], log k = {math.log(H.k):.4f}")
    print(f"max |P' + energy| (grid differences) = {worst:.2e}")


if __name__ == "__main__":
    main()
