#!/usr/bin/env python3
"""Compare the exact P_s volume polynomial with Monte-Carlo estimates for one random u."""
import argparse

import numpy as np

from epival import convexfn as cf
from epival.harness import gen_max_affine
from epival.hessian import Window, hessian_measure, ps_volume_mc


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--samples", type=int, default=10 ** 6)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    u = cf.conjugate(gen_max_affine(args.seed, 2, 6))
    W = Window.boxes([-0.8, -0.6], [0.7, 0.9], [-1.0, -1.0], [1.0, 1.0])
    t = hessian_measure(u, W)
    print("Theta:", ", ".join(f"{x:.6f}" for x in t.values))
    for s in (0.25, 0.5, 1.0, 2.0, 4.0):
        est = ps_volume_mc(u, s, W, args.samples, seed=args.seed, workers=args.workers)
        exact = t.ps_polynomial(s)
        z = (est.estimate - exact) / est.stderr
        print(f"s={s:<5} poly={exact:.6f} mc={est.estimate:.6f} se={est.stderr:.2e} z={z:+.2f}")
    assert np.all(np.asarray(t.values) >= 0)


if __name__ == "__main__":
    main()
