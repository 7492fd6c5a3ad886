"""Covering statistics (centres, separation, coverage, multiplicity) over a
grid of weights and delta fractions."""

import argparse
import itertools
import time

from blab.geometry import build_covering
from blab.weights import WeightSpec, m_tau


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=400)
    ap.add_argument("--epsilon", type=float, default=1e-2)
    args = ap.parse_args()
    weights = [WeightSpec.exponential(2.0, 1.0, 0.0), WeightSpec.exponential(1.0, 1.0, 0.0),
               WeightSpec.unweighted()]
    print("weight                                delta/m_tau  centres  sep  uncov  mult  seconds")
    for w, frac in itertools.product(weights, (0.5, 0.25)):
        t0 = time.perf_counter()
        c = build_covering(w, frac * m_tau(w), args.epsilon, args.grid)
        print(f"{w.key():38s} {frac:11.2f} {c.points.size:8d} {c.separation_violations:4d} "
              f"{c.uncovered:6d} {c.multiplicity:5d} {time.perf_counter() - t0:8.1f}")


if __name__ == "__main__":
    main()
