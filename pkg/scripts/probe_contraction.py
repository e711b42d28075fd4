"""Contraction of the uniqueness probe towards the KMS measure.

Starts from the uniform measure and from a random one and reports the total
variation distance to the eigenmeasure, seen on shallow cylinders, after n
steps.  With a depth-1 potential the probe is exact once n reaches the
measure depth, so a depth-2 potential is the default.

    python3 scripts/probe_contraction.py --H 1,2,3,1.5 --depth 12
"""

import argparse
import os

import numpy as np

from thermokms.algebra import uniqueness_probe
from thermokms.config import parse_function
from thermokms.measures import CylinderMeasure
from thermokms.serialize import write_csv
from thermokms.shift import CylinderFunction
from thermokms.transfer import beta_weight, leading_triple


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--H", default="1,2,3,1.5")
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--depth", type=int, default=12)
    ap.add_argument("--observe", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/probe")
    args = ap.parse_args()
    H = parse_function([float(v) for v in args.H.split(",")], args.k)
    k, D = H.k, args.depth
    n_max = D - max(H.depth, 1) + 1
    p = CylinderFunction.constant(k, 1.0 / k)
    nu = leading_triple(beta_weight(H, args.beta), D).eigenmeasure
    rng = np.random.default_rng(args.seed)
    starts = {
        "uniform": CylinderMeasure.uniform(k, D),
        "random": CylinderMeasure(k, D, rng.dirichlet(np.ones(k**D))),
    }
    profiles = {name: uniqueness_probe(H, args.beta, rho, n_max, p, nu, args.observe) for name, rho in starts.items()}
    rows = [(n, profiles["uniform"][n][1], profiles["random"][n][1]) for n in range(n_max + 1)]
    for n, a, b in rows:
        print(f"n={n:2d}  tv_uniform={a:.3e}  tv_random={b:.3e}")
    tv = np.array([r[1] for r in rows])
    ok = (tv[:-1] > 1e-14) & (tv[1:] > 1e-14)
    if ok.any():
        print(f"median contraction ratio {np.median(tv[1:][ok] / tv[:-1][ok]):.3f}")
    os.makedirs(args.out, exist_ok=True)
    write_csv(os.path.join(args.out, "probe.csv"), ["n", "tv_uniform", "tv_random"], rows)


if __name__ == "__main__":
    main()
