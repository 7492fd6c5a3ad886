"""Galerkin S_1 and S_2 norms of C_phi for phi(z) = r z against the closed
forms 1/(1-r) and (1-r^2)^(-1/2)."""

import argparse

import numpy as np

from blab.kernel import build_kernel_table
from blab.numerics import build_quadrature, default_boundary_exponent
from blab.operators import schatten_from_spectrum, pullback_spectrum
from blab.symbols import MapSpec, MultiplierSpec
from blab.weights import WeightSpec


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.8, 0.9])
    args = ap.parse_args()
    w = WeightSpec.exponential(1.0, 1.0, 0.0)
    t = build_kernel_table(w, 0.985)
    q = build_quadrature(256, 1024, default_boundary_exponent(w))
    print("   r         S_1     1/(1-r)     rel err         S_2  closed form     rel err")
    for r in args.radii:
        lam1, lam2 = pullback_spectrum(t, MultiplierSpec.one(), MapSpec.dilation(r), args.N, q)
        s1 = schatten_from_spectrum(lam1, lam2, 1.0, args.N).value_N
        s2 = schatten_from_spectrum(lam1, lam2, 2.0, args.N).value_N
        e1, e2 = 1 / (1 - r), 1 / np.sqrt(1 - r * r)
        print(f"{r:4.2f} {s1:11.6f} {e1:11.6f} {abs(s1 / e1 - 1):11.2e} "
              f"{s2:11.6f} {e2:11.6f} {abs(s2 / e2 - 1):11.2e}")


if __name__ == "__main__":
    main()
