"""Independent high-precision reference values (mpmath), frozen into the tests.

Run:  python3 scripts/oracles.py
"""

import json

import mpmath as mp

mp.mp.dps = 40


def log_moment(alpha, c, beta, k):
    """log of int_0^1 s^(2k+1) (1-s)^beta exp(-c/(1-s)^alpha) ds."""
    def f(t):
        return (1 - t) ** (2 * k + 1) * t ** beta * mp.exp(-c / t ** alpha)
    # peak of the integrand in t = 1 - s, split there for the quadrature
    g = lambda t: -(2 * k + 1) / (1 - t) + beta / t + c * alpha / t ** (alpha + 1)
    lo, hi = mp.mpf("1e-30"), mp.mpf(1) - mp.mpf("1e-30")
    for _ in range(400):
        mid = (lo + hi) / 2
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    tp = lo
    # dense geometric breakpoints around the peak, 16 per octave
    pts = [tp * mp.mpf(2) ** (mp.mpf(j) / 16) for j in range(-96, 96)]
    pts = sorted(set([mp.mpf(0), mp.mpf(1)] + [p for p in pts if p < 1]))
    return mp.log(mp.quad(f, pts, maxdegree=10))


def log_kernel_diag(alpha, c, beta, r, kmax):
    lp = [log_moment(alpha, c, beta, k) for k in range(kmax + 1)]
    x = mp.mpf(r) ** 2
    terms = [k * mp.log(x) - mp.log(2) - lp[k] for k in range(kmax + 1)]
    m = max(terms)
    return m + mp.log(mp.fsum(mp.exp(t - m) for t in terms)), terms[-1] - m


def main():
    out = {"log_moments": {}, "log_kernel_diag": {}}
    for (a, c, b) in [(1, 1, 0), (2, 1, 0), (1, 1, 1), (0.5, 2, 0.5)]:
        key = f"{a},{c},{b}"
        out["log_moments"][key] = {str(k): float(log_moment(a, c, b, k))
                                   for k in (0, 1, 10, 100, 1000)}
    for (a, c, b, r, kmax) in [(1, 1, 0, 0.5, 120), (1, 1, 0, 0.8, 400), (2, 1, 0, 0.5, 200)]:
        v, last = log_kernel_diag(a, c, b, r, kmax)
        out["log_kernel_diag"][f"{a},{c},{b},{r}"] = {"value": float(v), "last_term_rel": float(last)}
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
