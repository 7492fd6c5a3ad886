"""Classify the four reference maps for one weight and print a verdict table."""

import argparse
import time

from blab.kernel import build_kernel_table
from blab.numerics import build_quadrature, default_boundary_exponent
from blab.operators import ClassifyOptions, classify
from blab.symbols import MapSpec, MultiplierSpec
from blab.weights import WeightSpec

MAPS = [MapSpec.identity(), MapSpec.dilation(0.5), MapSpec.polynomial([0, 0, 1]),
        MapSpec.hyperbolic(1 / 3)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--c", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.0)
    ap.add_argument("--radius", type=float, default=0.985, help="kernel certified radius")
    ap.add_argument("--n-radial", type=int, default=256)
    ap.add_argument("--n-angular", type=int, default=1024)
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--criterion", action="store_true", help="also run the criterion integrals")
    args = ap.parse_args()

    w = WeightSpec.exponential(args.alpha, args.c, args.beta)
    t = build_kernel_table(w, args.radius)
    q = build_quadrature(args.n_radial, args.n_angular, default_boundary_exponent(w))
    opts = ClassifyOptions(N=args.N, criterion=args.criterion)
    print(f"weight {w.to_dict()}  K_max {t.k_max}  quadrature {args.n_radial}x{args.n_angular}")
    print(f"{'map':18s} {'bounded':10s} {'compact':11s} {'angular':24s} S_1/S_2 consistent")
    for phi in MAPS:
        t0 = time.perf_counter()
        r = classify(t, MultiplierSpec.one(), phi, q, opts)
        sp = "/".join(r.schatten[p].get("galerkin", {}).get("verdict", "-") for p in (1.0, 2.0))
        print(f"{phi.label:18s} {r.bounded.verdict:10s} {r.compact.verdict:11s} "
              f"{r.angular.verdict:24s} {sp:17s} {r.consistent}  ({time.perf_counter() - t0:.0f} s)")


if __name__ == "__main__":
    main()
