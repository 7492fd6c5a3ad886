"""Disk quadrature, radial moments and a Hermitian eigensolver.

The moment engine works with log p_k throughout: for alpha=2 the moments
fall below 1e-308 long before the kernel series is truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import integrate
from scipy.special import gammaln, roots_legendre

from .errors import AccuracyError, ConfigurationError, ContractViolation
from .weights import WeightKind, WeightSpec, log_weight_gap


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True, eq=False)
class DiskQuadrature:
    """Tensor rule for normalized area measure dA = dx dy / pi.

    Node (i, m) sits at radii[i] * exp(2 pi i m / n_angular) with mass
    ring_masses[i] / n_angular; `points` and `masses` are the flattened
    arrays in ring-major order.
    """

    radii: np.ndarray
    ring_masses: np.ndarray
    n_angular: int
    boundary_exponent: float
    radial_rule: str = "gauss-legendre"

    @property
    def n_radial(self):
        return self.radii.size

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular

    @property
    def points(self):
        return (self.radii[:, None] * np.exp(1j * self.angles)[None, :]).ravel()

    @property
    def masses(self):
        m = np.repeat(self.ring_masses / self.n_angular, self.n_angular)
        return m

    @property
    def nodes(self):
        return list(zip(self.points, self.masses))

    def integrate(self, f):
        """Sum of mass * f(point) for a vectorized f."""
        vals = f(self.points)
        return np.sum(self.masses * vals)

    def radial_integrate(self, g):
        """Integral of a radial function g(r) against dA."""
        return float(np.sum(self.ring_masses * g(self.radii)))


def build_quadrature(n_radial, n_angular, boundary_exponent=1.0) -> DiskQuadrature:
    """Gauss-Legendre in s = 1 - (1-r)^(1/b), trapezoid in angle.

    For integer b the rule integrates z^j conj(z)^k against dA exactly
    whenever |j-k| < n_angular and b*(j+k+2) <= 2*n_radial.
    """
    if int(n_radial) != n_radial or int(n_angular) != n_angular:
        raise ConfigurationError("node counts must be integers")
    n_radial, n_angular = int(n_radial), int(n_angular)
    if n_radial < 16 or n_angular < 16:
        raise ConfigurationError("need n_radial >= 16 and n_angular >= 16")
    b = float(boundary_exponent)
    if not b >= 1:
        raise ConfigurationError("boundary_exponent must be >= 1")
    x, wx = roots_legendre(n_radial)
    s = 0.5 * (x + 1.0)
    ws = 0.5 * wx
    gap = (1.0 - s) ** b
    r = 1.0 - gap
    jac = b * (1.0 - s) ** (b - 1.0)
    ring_masses = 2.0 * r * jac * ws
    return DiskQuadrature(
        radii=r, ring_masses=ring_masses, n_angular=n_angular,
        boundary_exponent=b,
        radial_rule=f"gauss-legendre n={n_radial} in s=1-(1-r)^(1/{b:g})",
    )


def default_boundary_exponent(w: WeightSpec) -> int:
    """tau exponent 1 + alpha/2 rounded up, so the rule stays polynomial-exact."""
    return max(1, math.ceil(w.tau_exponent - 1e-12))


# ---------------------------------------------------------------- moments

def _log_integrand_t(w, k, t):
    return (2 * k + 1) * np.log1p(-t) + log_weight_gap(w, t)


def _peak_t(w, k):
    """Maximizer of (2k+1) log(1-t) + log omega_gap(t) on (0, 1)."""
    def dlog(u):
        # derivative with respect to u = log t
        t = math.exp(u)
        d = -(2 * k + 1) * t / (-math.expm1(u))
        if w.kind is WeightKind.EXPONENTIAL:
            d += w.c * w.alpha * math.exp(min(-w.alpha * u, 700.0)) + w.beta
        elif w.kind is WeightKind.STANDARD:
            d += w.gamma
        return d + 1.0

    lo, hi = -700.0, -1e-16
    if dlog(lo) < 0:
        return math.exp(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dlog(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14:
            break
    return math.exp(0.5 * (lo + hi))


def log_radial_moment(w: WeightSpec, k, tol=1e-10, limit=500):
    """log p_k via adaptive subdivision (QUADPACK) in t = 1 - s."""
    if k < 0 or int(k) != k:
        raise ConfigurationError("moment index must be a nonnegative integer")
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    k = int(k)
    tp = _peak_t(w, k)
    tp = min(max(tp, 1e-12), 1.0 - 1e-12)
    gstar = float(_log_integrand_t(w, k, tp))

    def f(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        return math.exp(float(_log_integrand_t(w, k, t)) - gstar)

    pieces = [(0.0, tp), (tp, 1.0)]
    total, err = 0.0, 0.0
    for a, b in pieces:
        val, e = integrate.quad(f, a, b, epsabs=0.0, epsrel=tol / 4, limit=limit)
        total += val
        err += e
    if not total > 0 or err > tol * total:
        raise AccuracyError(f"moment k={k} did not converge", achieved=err / max(total, 1e-300))
    return gstar + math.log(total)


def radial_moment(w: WeightSpec, k, tol=1e-10):
    """p_k = integral_0^1 s^(2k+1) omega(s) ds (may underflow to 0 for huge k)."""
    return math.exp(log_radial_moment(w, k, tol))


_GL_Q = 16
_GL_X, _GL_W = roots_legendre(_GL_Q)


@nb.njit(cache=True)
def _g_exp(u, k2, alpha, c, beta):
    return k2 * math.log(-math.expm1(u)) - c * math.exp(-alpha * u) + beta * u + u


@nb.njit(cache=True)
def _dg_exp(u, k2, alpha, c, beta):
    t = math.exp(u)
    return -k2 * t / (-math.expm1(u)) + c * alpha * math.exp(-alpha * u) + beta + 1.0


@nb.njit(cache=True)
def _bisect_dg(k2, alpha, c, beta, lo, hi):
    # dg is decreasing; find its root in [lo, hi]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _dg_exp(mid, k2, alpha, c, beta) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    return 0.5 * (lo + hi)


@nb.njit(cache=True)
def _bisect_level(k2, alpha, c, beta, lo, hi, level, rising):
    # g - level changes sign on [lo, hi]; rising means g increases on it
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = _g_exp(mid, k2, alpha, c, beta) > level
        if above == rising:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-10:
            break
    return 0.5 * (lo + hi)


@nb.njit(cache=True)
def _log_moments_exp(alpha, c, beta, k0, k1, gx, gw, n_panels, drop):
    """log p_k for k0 <= k < k1 using u = log(1 - s) and composite
    Gauss-Legendre on the window where the integrand exceeds exp(-drop)
    times its peak."""
    out = np.empty(k1 - k0)
    q = gx.size
    u_min = -600.0 / alpha
    for idx in range(k1 - k0):
        k2 = 2.0 * (k0 + idx) + 1.0
        up = _bisect_dg(k2, alpha, c, beta, u_min, -1e-16)
        gs = _g_exp(up, k2, alpha, c, beta)
        level = gs - drop
        # left end: g rises from -inf to gs on (u_min, up)
        if _g_exp(u_min, k2, alpha, c, beta) > level:
            ul = u_min
        else:
            ul = _bisect_level(k2, alpha, c, beta, u_min, up, level, True)
        ur = _bisect_level(k2, alpha, c, beta, up, -1e-16, level, False)
        total = 0.0
        h = (ur - ul) / n_panels
        for p in range(n_panels):
            a = ul + p * h
            for j in range(q):
                u = a + 0.5 * h * (gx[j] + 1.0)
                total += gw[j] * math.exp(_g_exp(u, k2, alpha, c, beta) - gs)
        out[idx] = gs + math.log(0.5 * h * total)
    return out


def log_moments(w: WeightSpec, k_max, n_panels=8, drop=60.0, start=0):
    """log p_k for k = start..k_max inclusive, vectorized over k."""
    k = np.arange(start, k_max + 1)
    if w.kind is WeightKind.UNWEIGHTED:
        return -np.log(2.0 * k + 2.0)
    if w.kind is WeightKind.STANDARD:
        g = w.gamma
        return gammaln(2 * k + 2.0) + gammaln(g + 1.0) - gammaln(2 * k + g + 3.0)
    return _log_moments_exp(float(w.alpha), float(w.c), float(w.beta), int(start),
                            int(k_max) + 1, _GL_X, _GL_W, int(n_panels), float(drop))


# ---------------------------------------------------------------- eigensolver

@dataclass(frozen=True, eq=False)
class HermitianSpectrum:
    eigenvalues: np.ndarray
    dimension: int
    residual: float
    sweeps: int
    vectors: np.ndarray | None = None


@nb.njit(cache=True)
def _jacobi_hermitian(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    sweeps = 0
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += abs(a[p, q]) ** 2
        off = math.sqrt(2.0 * off)
        if off <= tol:
            break
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                ph = apq / mag
                # rotate column/row q so that a[p, q] becomes real
                phc = ph.conjugate()
                for r in range(n):
                    a[r, q] = a[r, q] * phc
                for r in range(n):
                    a[q, r] = a[q, r] * ph
                for r in range(n):
                    v[r, q] = v[r, q] * phc
                app = a[p, p].real
                aqq = a[q, q].real
                zeta = (aqq - app) / (2.0 * mag)
                if zeta >= 0:
                    t = 1.0 / (zeta + math.sqrt(1.0 + zeta * zeta))
                else:
                    t = -1.0 / (-zeta + math.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = t * cs
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = cs * arp - sn * arq
                    a[r, q] = sn * arp + cs * arq
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = cs * apr - sn * aqr
                    a[q, r] = sn * apr + cs * aqr
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = cs * vrp - sn * vrq
                    v[r, q] = sn * vrp + cs * vrq
    return a, v, sweeps


MAX_DIMENSION = 400


def hermitian_eigenvalues(M, with_vectors=False, max_sweeps=60) -> HermitianSpectrum:
    """Full spectrum of a Hermitian matrix by cyclic complex Jacobi rotations."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractViolation("matrix must be square")
    n = M.shape[0]
    if n > MAX_DIMENSION:
        raise ConfigurationError(f"dimension {n} exceeds cap {MAX_DIMENSION}")
    if n == 0:
        return HermitianSpectrum(np.zeros(0), 0, 0.0, 0)
    A = M.astype(np.complex128)
    scale = float(np.max(np.abs(A)))
    if np.max(np.abs(A - A.conj().T)) > 1e-12 * max(scale, 1e-300):
        raise ContractViolation("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    fro = float(np.linalg.norm(A))
    D, V, sweeps = _jacobi_hermitian(A.copy(), 1e-13 * fro, max_sweeps)
    lam = D.diagonal().real.copy()
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    V = V[:, order]
    res = float(np.max(np.linalg.norm(A @ V - V * lam[None, :], axis=0))) if n else 0.0
    return HermitianSpectrum(lam, n, res, int(sweeps), V if with_vectors else None)
