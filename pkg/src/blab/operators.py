"""Berezin transforms, Carleson diagnostics, pullback measures and the
classification of weighted composition operators u C_phi."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import logsumexp, roots_legendre

from .errors import ConfigurationError, DomainError, NotSelfMapError
from .geometry import CoveringSequence
from .kernel import KernelTable, log_kernel_diag
from .numerics import MAX_DIMENSION, DiskQuadrature, hermitian_eigenvalues
from .symbols import MapSpec, MultiplierSpec, global_angular_verdict
from .weights import (RingProtocol, WeightSpec, eval_log_weight, eval_tau, m_tau,
                      ratio_ring_stats)

# atoms whose contribution bound lies this many e-folds below the largest
# bound are dropped before any kernel series is summed
PRUNE = 80.0
CHUNK = 1 << 21
FLUSH = -340.0


# ---------------------------------------------------------------- measures

@dataclass(eq=False)
class DiscreteMeasure:
    """Atoms with masses stored as logs (mass 0 is -inf and is dropped).

    `rings` = (radii, n_angular) marks a tensor layout: atom i*n + m sits at
    radii[i] exp(2 pi i m / n).  It enables FFT evaluation of Berezin sums.
    """

    points: np.ndarray
    log_masses: np.ndarray
    rings: tuple | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.complex128).ravel()
        self.log_masses = np.asarray(self.log_masses, dtype=float).ravel()
        if self.points.shape != self.log_masses.shape:
            raise ConfigurationError("points and masses differ in length")
        if np.any(np.abs(self.points) >= 1):
            raise DomainError("atoms must lie in the open unit disk")
        if np.any(np.isnan(self.log_masses)) or np.any(self.log_masses == np.inf):
            raise ConfigurationError("masses must be finite and nonnegative")

    @classmethod
    def from_atoms(cls, points, masses):
        m = np.asarray(masses, dtype=float)
        if np.any(m < 0):
            raise ConfigurationError("masses must be nonnegative")
        with np.errstate(divide="ignore"):
            return cls(points, np.log(m))

    @classmethod
    def from_quadrature(cls, quad: DiskQuadrature):
        return cls(quad.points, np.log(quad.masses), rings=(quad.radii, quad.n_angular))

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=complex), np.zeros(0))

    @property
    def masses(self):
        return np.exp(self.log_masses)

    @property
    def size(self):
        return self.points.size

    @property
    def total_mass(self):
        return float(np.sum(self.masses))

    def scaled(self, log_factor):
        """Same atoms with masses multiplied by exp(log_factor)."""
        return DiscreteMeasure(self.points, self.log_masses + log_factor, self.rings)

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        rings = None
        if self.rings is not None:
            radii, n = self.rings
            per_ring = mask.reshape(-1, n)
            if np.all(per_ring.all(axis=1) | ~per_ring.any(axis=1)):
                keep = per_ring.all(axis=1)
                rings = (radii[keep], n)
        return DiscreteMeasure(self.points[mask], self.log_masses[mask], rings)


@dataclass(eq=False)
class PullbackMeasure(DiscreteMeasure):
    """Atoms (phi(x_i), m_i |u(x_i)|^2 omega(x_i)/omega(phi(x_i)))."""

    base: DiskQuadrature | None = None
    map: MapSpec | None = None
    multiplier: MultiplierSpec | None = None
    source: np.ndarray | None = None


def pullback_measure(w: WeightSpec, quad: DiskQuadrature, phi: MapSpec,
                     u: MultiplierSpec = MultiplierSpec()) -> PullbackMeasure:
    x = quad.points
    fx = phi.evaluate(x)
    if np.any(np.abs(fx) >= 1):
        raise NotSelfMapError("phi maps a quadrature node out of the disk")
    lm = np.log(quad.masses) + u.log_abs2(x) + eval_log_weight(w, np.abs(x)) \
        - eval_log_weight(w, np.abs(fx))
    keep = np.isfinite(lm)
    return PullbackMeasure(fx[keep], lm[keep], None, base=quad, map=phi, multiplier=u,
                           source=x[keep])


# ---------------------------------------------------------------- Berezin sums

def _envelope(t: KernelTable, rho):
    """max_k (k log rho - log 2p_k), a lower bound for log sum_k rho^k/2p_k."""
    rho = np.asarray(rho, dtype=float)
    out = np.full(rho.shape, -t.l2p[0])
    pos = rho > 0
    lr = np.log(rho[pos])
    ks = np.searchsorted(t.dl, lr, side="left")
    out[pos] = ks * lr - t.l2p[ks]
    return out


def _prune(t, logc, absx):
    """Indices of atoms that can matter: log c + 2 log K(|x|) upper bound."""
    if logc.size == 0:
        return np.zeros(0, dtype=np.int64)
    bound = logc + 2 * (_envelope(t, absx) + math.log(t.k_max + 1.0))
    return np.flatnonzero(bound >= bound.max() - PRUNE)


def _ring_log_sums(t: KernelTable, logc, w, radius, n_angles):
    """log sum_i exp(logc_i) |K(z_m, w_i)|^2 for z_m on a ring of n_angles."""
    if w.size == 0:
        return np.full(n_angles, -np.inf)
    x_abs = radius * np.abs(w)
    keep = _prune(t, logc, x_abs)
    logc, w = logc[keep], w[keep]
    out = np.full(n_angles, -np.inf)
    step = max(1, CHUNK // n_angles)
    for s in range(0, w.size, step):
        bins, shift, _ = t.fold(radius * np.conj(w[s:s + step]), n_angles)
        V = np.fft.ifft(bins, axis=1) * n_angles
        with np.errstate(divide="ignore"):
            L = (logc[s:s + step] + 2 * shift)[:, None] + np.log(np.abs(V) ** 2)
        out = np.logaddexp(out, logsumexp(L, axis=0))
    return out


def _point_log_sum(t: KernelTable, logc, w, z):
    """log sum_i exp(logc_i) |K(z, w_i)|^2 for one point z."""
    if w.size == 0:
        return -np.inf
    keep = _prune(t, logc, abs(z) * np.abs(w))
    logc, w = logc[keep], w[keep]
    out = -np.inf
    for s in range(0, w.size, CHUNK):
        bins, shift, _ = t.fold(z * np.conj(w[s:s + CHUNK]), 1)
        with np.errstate(divide="ignore"):
            L = logc[s:s + CHUNK] + 2 * shift + np.log(np.abs(bins[:, 0]) ** 2)
        out = np.logaddexp(out, logsumexp(L))
    return float(out)


def _tensor_log_sum(t: KernelTable, logc, radii, n, z):
    """Same as _point_log_sum for atoms on a tensor grid, one FFT per ring."""
    logc = logc.reshape(radii.size, n)
    ring_bound = np.max(logc, axis=1) + 2 * (_envelope(t, abs(z) * radii) + math.log(t.k_max + 1.0))
    keep = np.flatnonzero(ring_bound >= ring_bound.max() - PRUNE)
    out = -np.inf
    step = max(1, CHUNK // n)
    for s in range(0, keep.size, step):
        idx = keep[s:s + step]
        bins, shift, _ = t.fold(z * radii[idx].astype(np.complex128), n)
        V = np.fft.fft(bins, axis=1)
        with np.errstate(divide="ignore"):
            L = logc[idx] + 2 * shift[:, None] + np.log(np.abs(V) ** 2)
        out = np.logaddexp(out, logsumexp(L))
    return float(out)


def log_berezin(t: KernelTable, mu: DiscreteMeasure, z):
    """log of mu-tilde(z) = sum_i mass_i |k_z(w_i)|^2 omega(w_i)."""
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("z must lie in the open unit disk")
    if mu.size == 0:
        return -np.inf
    logc = mu.log_masses + eval_log_weight(t.weight, np.abs(mu.points))
    lkz = log_kernel_diag(t, z)
    if mu.rings is not None:
        radii, n = mu.rings
        return _tensor_log_sum(t, logc, radii, n, z) - lkz
    return _point_log_sum(t, logc, mu.points, z) - lkz


def berezin(t: KernelTable, mu: DiscreteMeasure, z):
    z = np.asarray(z)
    if z.ndim == 0:
        return math.exp(log_berezin(t, mu, complex(z)))
    return np.array([math.exp(log_berezin(t, mu, complex(v))) for v in z.ravel()]).reshape(z.shape)


def log_berezin_ring(t: KernelTable, mu: DiscreteMeasure, radius, n_angles=64):
    """log mu-tilde at radius * exp(2 pi i m / n_angles), m = 0..n-1."""
    logc = mu.log_masses + eval_log_weight(t.weight, np.abs(mu.points))
    return _ring_log_sums(t, logc, mu.points, float(radius), int(n_angles)) \
        - log_kernel_diag(t, float(radius))


def averaging(w: WeightSpec, mu: DiscreteMeasure, z, delta, tree=None):
    """mu(D(delta tau(z))) / (delta tau(z))^2 with normalized area."""
    if not 0 < delta < m_tau(w):
        raise DomainError(f"delta must lie in (0, m_tau) = (0, {m_tau(w):.6g})")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    rad = delta * eval_tau(w, np.abs(z))
    if mu.size == 0:
        out = np.zeros(z.shape)
    else:
        tree = tree or cKDTree(np.column_stack([mu.points.real, mu.points.imag]))
        m = mu.masses
        out = np.empty(z.shape)
        for i, (p, r) in enumerate(zip(z, rad)):
            idx = tree.query_ball_point((p.real, p.imag), r)
            idx = [j for j in idx if abs(mu.points[j] - p) < r]
            out[i] = m[idx].sum() / r ** 2 if idx else 0.0
    return float(out[0]) if out.size == 1 else out


@dataclass
class CarlesonReport:
    sup_berezin: float
    sup_averaging: float
    sup_covering: float
    averbere_constant: float
    sups_spread: float

    def to_dict(self):
        return dict(self.__dict__)


def carleson_diagnostics(w: WeightSpec, t: KernelTable, mu: DiscreteMeasure, delta,
                         test_points, covering: CoveringSequence) -> CarlesonReport:
    """The three sups (Berezin, averaging, averaging over the delta-sequence)
    and the empirical constant in mu-hat <= C mu-tilde."""
    tp = np.atleast_1d(np.asarray(test_points, dtype=complex))
    tree = cKDTree(np.column_stack([mu.points.real, mu.points.imag])) if mu.size else None
    btil = np.array([math.exp(log_berezin(t, mu, z)) for z in tp])
    bhat = np.atleast_1d(averaging(w, mu, tp, delta, tree))
    bcov = np.atleast_1d(averaging(w, mu, covering.points, delta, tree))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(btil > 0, bhat / btil, 0.0)
    sups = np.array([btil.max(), bhat.max(), bcov.max()])
    spread = float(sups.max() / sups.min()) if sups.min() > 0 else math.inf
    return CarlesonReport(float(sups[0]), float(sups[1]), float(sups[2]),
                          float(ratio.max()), spread)


def _phi_logc(w, quad, u, phi):
    x = quad.points
    fx = phi.evaluate(x)
    if np.any(np.abs(fx) >= 1):
        raise NotSelfMapError("phi maps a quadrature node out of the disk")
    logc = np.log(quad.masses) + u.log_abs2(x) + eval_log_weight(w, np.abs(x))
    keep = np.isfinite(logc)
    return logc[keep], fx[keep]


def log_phi_berezin(t: KernelTable, u: MultiplierSpec, phi: MapSpec, z, quad: DiskQuadrature):
    """log B_phi(|u|^2)(z) = log of the quadrature of |k_z(phi)|^2 |u|^2 omega."""
    z = complex(z)
    logc, fx = _phi_logc(t.weight, quad, u, phi)
    return _point_log_sum(t, logc, fx, z) - log_kernel_diag(t, z)


def phi_berezin(t, u, phi, z, quad):
    return math.exp(log_phi_berezin(t, u, phi, z, quad))


def log_phi_berezin_ring(t, u, phi, radius, quad, n_angles=64):
    logc, fx = _phi_logc(t.weight, quad, u, phi)
    return _ring_log_sums(t, logc, fx, float(radius), int(n_angles)) \
        - log_kernel_diag(t, float(radius))


# ---------------------------------------------------------------- verdicts

DEFAULT_KERNEL_RINGS = RingProtocol(epsilons=(0.2, 0.1, 0.05), n_angles=64)


def _ring_sups(t, u, phi, quad, rings: RingProtocol):
    return np.array([float(np.max(log_phi_berezin_ring(t, u, phi, r, quad, rings.n_angles)))
                     for r in rings.radii])


@dataclass
class BoundednessVerdict:
    verdict: str
    sup_rings: list
    sup_estimate: float
    ratio_verdict: str | None
    ratio_log_rings: list | None
    consistent: bool
    log_sup_rings: list = field(default_factory=list)


def _stabilizes(s):
    return bool(np.all(s[1:] / s[:-1] < 1.5))


def _grows(s):
    return bool(np.all(np.diff(s) > 0) and s[-1] > 10 * s[0])


def classify_boundedness(t, u, phi, quad, rings=DEFAULT_KERNEL_RINGS,
                         ratio_rings=RingProtocol(), log_sups=None) -> BoundednessVerdict:
    ls = _ring_sups(t, u, phi, quad, rings) if log_sups is None else np.asarray(log_sups)
    s = np.exp(np.minimum(ls, 700.0))
    if _stabilizes(s):
        v = "Bounded"
    elif _grows(s):
        v = "Unbounded"
    else:
        v = "Indeterminate"
    inner = [math.exp(log_phi_berezin(t, u, phi, z, quad)) for z in (0.0, 0.5)]
    sup = float(max(max(inner), s.max()))
    rv, rl, consistent = None, None, True
    if u.is_one:
        ref, rl = ratio_ring_stats(t.weight, phi, ratio_rings)
        bounded = all(v_ < math.log(ratio_rings.bounded_factor) + ref for v_ in rl)
        rv = "Bounded" if bounded else "Unbounded"
        consistent = rv == v
    return BoundednessVerdict(v, [float(x) for x in s], sup, rv, rl, consistent,
                              [float(x) for x in ls])


@dataclass
class CompactnessVerdict:
    verdict: str
    ring_sups: list
    berezin_to_zero: bool
    ratio_to_zero: bool | None
    angular: str | None
    consistent: bool


def classify_compactness(t, u, phi, quad, rings=DEFAULT_KERNEL_RINGS,
                         ratio_rings=RingProtocol(), bounded: BoundednessVerdict | None = None,
                         angular=None) -> CompactnessVerdict:
    ls = np.asarray(bounded.log_sup_rings) if bounded is not None else _ring_sups(t, u, phi, quad, rings)
    s = np.exp(np.minimum(ls, 700.0))
    to_zero = rings.tends_to_zero_log(ls)
    if bounded is not None and bounded.verdict == "Unbounded":
        v = "NotCompact"
    elif to_zero:
        v = "Compact"
    elif s[-1] >= 10 * rings.zero_threshold and s[-1] >= 0.5 * s.max():
        v = "NotCompact"
    else:
        v = "Indeterminate"
    rz, ang, consistent = None, None, True
    if u.is_one:
        _, rl = ratio_ring_stats(t.weight, phi, ratio_rings)
        rz = ratio_rings.tends_to_zero_log(rl)
        ang = (angular or global_angular_verdict(phi)).verdict
        a_ok = ang == "AllAboveOne"
        if v in ("Compact", "NotCompact"):
            consistent = (v == "Compact") == rz == a_ok
    return CompactnessVerdict(v, [float(x) for x in s], to_zero, rz, ang, consistent)


@dataclass
class EssentialNormBracket:
    lower: float
    upper: float
    c_report: float
    tail_norm: float | None
    tail_check: bool | None


def essential_norm_bracket(t, u, phi, quad, rings=DEFAULT_KERNEL_RINGS, c_report=10.0,
                           log_sups=None, tail_n=None, tail_N=None) -> EssentialNormBracket:
    ls = _ring_sups(t, u, phi, quad, rings) if log_sups is None else np.asarray(log_sups)
    lower = float(math.exp(min(ls[-1], 700.0)))
    tail = check = None
    if tail_N is not None:
        n = tail_N // 2 if tail_n is None else tail_n
        tail = tail_projection_norm(t, u, phi, n, tail_N, quad)
        check = bool(tail >= 0.9 * lower)
    return EssentialNormBracket(lower, c_report * lower, c_report, tail, check)


# ---------------------------------------------------------------- Galerkin

def _check_dim(N):
    if not 0 < N <= MAX_DIMENSION:
        raise ConfigurationError(f"matrix dimension must lie in 1..{MAX_DIMENSION}")


def _basis_factor(t: KernelTable, points, log_scale, N, phase_extra=None):
    """F[i, j] = exp(log_scale_i) points_i^j / sqrt(2p_j) (optionally times
    phase_extra_i); magnitudes via logs so that no power under- or overflows."""
    j = np.arange(N)
    a = np.abs(points)
    with np.errstate(divide="ignore", invalid="ignore"):
        la = np.log(a)
        L = log_scale[:, None] + la[:, None] * j[None, :] - 0.5 * t.l2p[None, :N]
    L[:, 0] = log_scale - 0.5 * t.l2p[0]
    # subnormal entries make BLAS crawl; below e^-340 products are negligible
    L[L < FLUSH] = -np.inf
    unit = np.where(a > 0, points / np.where(a > 0, a, 1.0), 1.0)
    ph = np.empty((points.size, N), dtype=np.complex128)
    ph[:, 0] = 1.0
    if N > 1:
        ph[:, 1:] = unit[:, None]
        np.cumprod(ph, axis=1, out=ph)
    F = np.exp(L) * ph
    if phase_extra is not None:
        F *= phase_extra[:, None]
    return F


def _prune_basis(t, points, log_scale, N):
    """Atoms whose basis row max exp(log_scale + max_{j<N}(j log|w| - l2p_j/2))
    is negligible."""
    if points.size == 0:
        return np.zeros(0, dtype=np.int64)
    a2 = np.abs(points) ** 2
    env = np.full(a2.shape, -t.l2p[0])
    pos = a2 > 0
    la = np.log(a2[pos])
    ks = np.minimum(np.searchsorted(t.dl, la, side="left"), N - 1)
    env[pos] = ks * la - t.l2p[ks]
    b = log_scale + 0.5 * env
    return np.flatnonzero(b >= b.max() - 45.0)


def toeplitz_matrix(t: KernelTable, mu: DiscreteMeasure, N):
    """M[j, k] = sum_i mass_i e_j(w_i) conj(e_k(w_i)) omega(w_i)."""
    _check_dim(N)
    if N > t.k_max + 1:
        raise ConfigurationError("matrix dimension exceeds the moment table")
    M = np.zeros((N, N), dtype=np.complex128)
    if mu.size == 0:
        return M
    ls = 0.5 * (mu.log_masses + eval_log_weight(t.weight, np.abs(mu.points)))
    keep = _prune_basis(t, mu.points, ls, N)
    step = max(1, (1 << 22) // N)
    for s in range(0, keep.size, step):
        idx = keep[s:s + step]
        F = _basis_factor(t, mu.points[idx], ls[idx], N)
        M += F.T @ F.conj()
    return 0.5 * (M + M.conj().T)


def galerkin_matrix(t: KernelTable, u: MultiplierSpec, phi: MapSpec, N, quad: DiskQuadrature):
    """G[j, k] = <u C_phi e_k, e_j> by quadrature."""
    _check_dim(N)
    x = quad.points
    fx = phi.evaluate(x)
    ux = u.evaluate(x)
    ls = 0.5 * (np.log(quad.masses) + eval_log_weight(t.weight, np.abs(x)))
    keep = np.intersect1d(_prune_basis(t, x, ls, N), np.flatnonzero(ux != 0))
    G = np.zeros((N, N), dtype=np.complex128)
    step = max(1, (1 << 21) // N)
    for s in range(0, keep.size, step):
        idx = keep[s:s + step]
        A = _basis_factor(t, fx[idx], ls[idx], N, ux[idx])
        B = _basis_factor(t, x[idx], ls[idx], N)
        G += B.conj().T @ A
    return G


def tail_projection_norm(t, u, phi, n, N, quad):
    """Largest singular value of the Galerkin matrix restricted to columns >= n."""
    _check_dim(N)
    if not 0 <= n < N:
        raise ConfigurationError("need 0 <= n < N")
    G = galerkin_matrix(t, u, phi, N, quad)[:, n:]
    spec = hermitian_eigenvalues(G.conj().T @ G)
    return math.sqrt(max(spec.eigenvalues[0], 0.0))


def _verdict_from_partials(partials, log_space=False):
    """Finite when the last two partials agree to 1e-3, Infinite when every
    step grows by more than 2x."""
    p = np.asarray(partials, dtype=float)
    if log_space:
        last_gap = p[-1] - p[-2]
        if np.isfinite(p[-1]) and last_gap <= math.log1p(1e-3):
            return "Finite"
        if np.all(np.diff(p) > math.log(2.0)):
            return "Infinite"
        return "Indeterminate"
    if p[-1] == 0:
        return "Finite"
    if abs(p[-1] - p[-2]) <= 1e-3 * abs(p[-1]):
        return "Finite"
    if np.all(p[1:] > 2 * p[:-1]):
        return "Infinite"
    return "Indeterminate"


@dataclass
class SchattenResult:
    p: float
    value_N: float
    value_2N: float
    N: int
    relative_change: float
    verdict: str
    eigenvalues: np.ndarray = field(repr=False, default=None)


def pullback_spectrum(t, u, phi, N, quad):
    """Descending eigenvalues of the 2N and N pullback Toeplitz sections.

    The N section is the leading block of the 2N one, so a single assembly
    serves both.
    """
    _check_dim(2 * N)
    if u.is_zero:
        return np.zeros(N), np.zeros(2 * N)
    mu = pullback_measure(t.weight, quad, phi, u)
    M2 = toeplitz_matrix(t, mu, 2 * N)
    lam2 = np.clip(hermitian_eigenvalues(M2).eigenvalues, 0, None)
    lam1 = np.clip(hermitian_eigenvalues(M2[:N, :N]).eigenvalues, 0, None)
    return lam1, lam2


def schatten_from_spectrum(lam1, lam2, p, N) -> SchattenResult:
    if not p > 0:
        raise ConfigurationError("p must be positive")
    s1 = float(np.sum(lam1 ** (p / 2)) ** (1 / p))
    s2 = float(np.sum(lam2 ** (p / 2)) ** (1 / p))
    rel = abs(s2 - s1) / s2 if s2 > 0 else 0.0
    return SchattenResult(p, s1, s2, N, rel, "Finite" if rel < 1e-3 else "Infinite", lam2)


def schatten_norm(t, u, phi, p, N, quad) -> SchattenResult:
    """(sum lambda^(p/2))^(1/p) over the pullback Toeplitz spectrum, at N and 2N."""
    if not p > 0:
        raise ConfigurationError("p must be positive")
    return schatten_from_spectrum(*pullback_spectrum(t, u, phi, N, quad), p, N)


def _annulus_nodes(radii_bounds, n_per):
    """Gauss-Legendre radii and dA weights (times 2 pi) on each annulus."""
    x, wx = roots_legendre(n_per)
    rs, ws, owner = [], [], []
    lo = 0.0
    for j, hi in enumerate(radii_bounds):
        r = lo + (hi - lo) * 0.5 * (x + 1)
        rs.append(r)
        ws.append(2 * r * (hi - lo) * 0.5 * wx)
        owner.append(np.full(n_per, j))
        lo = hi
    return np.concatenate(rs), np.concatenate(ws), np.concatenate(owner)


@dataclass
class CriterionResult:
    partials: list
    log_partials: list
    radii: list
    verdict: str


DEFAULT_CRITERION_DISKS = (0.8, 0.9, 0.95, 0.97)


def schatten_criterion(t, u, phi, p, quad, disks=DEFAULT_CRITERION_DISKS, n_per=8,
                       n_angles=64) -> CriterionResult:
    """Partial integrals of B_phi(|u|^2)^(p/2) tau^-2 dA over |z| < R_j."""
    if not p > 0:
        raise ConfigurationError("p must be positive")
    if u.is_zero:
        return CriterionResult([0.0] * len(disks), [-math.inf] * len(disks), list(disks), "Finite")
    r, wr, owner = _annulus_nodes(disks, n_per)
    w = t.weight
    terms = []
    for ri, wi in zip(r, wr):
        lb = log_phi_berezin_ring(t, u, phi, ri, quad, n_angles)
        vals = 0.5 * p * lb - 2 * math.log(eval_tau(w, ri))
        terms.append(logsumexp(vals) + math.log(wi / n_angles))
    terms = np.array(terms)
    lp = [float(logsumexp(terms[owner <= j])) for j in range(len(disks))]
    v = _verdict_from_partials(lp, log_space=True)
    return CriterionResult([math.exp(min(v_, 700.0)) for v_ in lp], lp, list(disks), v)


DEFAULT_HS_EPSILONS = (1e-1, 1e-2, 1e-3)


def hilbert_schmidt_test(w, u, phi, quad=None, epsilons=DEFAULT_HS_EPSILONS, n_per=32,
                         n_angles=2048) -> CriterionResult:
    """Partial integrals of omega(z)/omega(phi z) (tau(z)/tau(phi z))^2 |u|^2 tau(z)^-2."""
    if u.is_zero:
        return CriterionResult([0.0] * len(epsilons), [-math.inf] * len(epsilons),
                               [1 - e for e in epsilons], "Finite")
    bounds = [1 - e for e in epsilons]
    r, wr, owner = _annulus_nodes(bounds, n_per)
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    terms = []
    for ri, wi in zip(r, wr):
        z = ri * np.exp(1j * th)
        fz = phi.evaluate(z)
        if np.any(np.abs(fz) >= 1):
            raise NotSelfMapError("map leaves the disk")
        with np.errstate(divide="ignore"):
            v = (eval_log_weight(w, np.abs(z)) - eval_log_weight(w, np.abs(fz))
                 - 2 * np.log(eval_tau(w, np.abs(fz))) + u.log_abs2(z))
        terms.append(logsumexp(v) + math.log(wi / n_angles))
    terms = np.array(terms)
    lp = [float(logsumexp(terms[owner <= j])) for j in range(len(bounds))]
    v = _verdict_from_partials(lp, log_space=True)
    return CriterionResult([math.exp(min(v_, 700.0)) for v_ in lp], lp, bounds, v)


def adjoint_kernel_norm(t, u, phi, z):
    """|u(z)|^2 K(phi z, phi z)/K(z, z), the squared norm of (u C_phi)^* k_z."""
    z = complex(z)
    fz = complex(phi.evaluate(np.complex128(z)))
    lu = float(u.log_abs2(np.complex128(z)))
    if lu == -math.inf:
        return 0.0
    return math.exp(lu + log_kernel_diag(t, fz) - log_kernel_diag(t, z))


def adjoint_kernel_norm_quadrature(t, u, phi, z, quad):
    """Same quantity as the quadrature of |u(z)|^2 |K(phi z, xi)|^2 omega(xi) / K(z,z)."""
    z = complex(z)
    fz = complex(phi.evaluate(np.complex128(z)))
    lu = float(u.log_abs2(np.complex128(z)))
    if lu == -math.inf:
        return 0.0
    mu = DiscreteMeasure.from_quadrature(quad)
    logc = mu.log_masses + eval_log_weight(t.weight, np.abs(mu.points))
    return math.exp(lu + _tensor_log_sum(t, logc, quad.radii, quad.n_angular, fz)
                    - log_kernel_diag(t, z))


# ---------------------------------------------------------------- report

@dataclass
class ClassificationReport:
    weight: WeightSpec
    map: MapSpec
    multiplier: MultiplierSpec
    bounded: BoundednessVerdict
    compact: CompactnessVerdict
    essential_norm: EssentialNormBracket
    schatten: dict
    checks: dict
    consistent: bool
    angular: object = None

    def to_dict(self):
        b, c, e = self.bounded, self.compact, self.essential_norm
        return {
            "weight": self.weight.to_dict(),
            "map": self.map.to_dict(),
            "multiplier": self.multiplier.to_dict(),
            "bounded": {"verdict": b.verdict, "ring_sups": b.sup_rings,
                        "sup_estimate": b.sup_estimate, "ratio_verdict": b.ratio_verdict,
                        "consistent": b.consistent},
            "compact": {"verdict": c.verdict, "ring_sups": c.ring_sups,
                        "berezin_to_zero": c.berezin_to_zero, "ratio_to_zero": c.ratio_to_zero,
                        "consistent": c.consistent},
            "essential_norm_bracket": [e.lower, e.upper],
            "schatten": {f"{p:g}": v for p, v in self.schatten.items()},
            "necessary_checks": self.checks,
            "angular": self.angular.to_dict() if self.angular is not None else None,
            "consistent": self.consistent,
        }


@dataclass
class ClassifyOptions:
    """Knobs of a full classification run."""

    p_values: tuple = (1.0, 2.0)
    N: int = 200
    rings: RingProtocol = DEFAULT_KERNEL_RINGS
    ratio_rings: RingProtocol = RingProtocol()
    criterion_disks: tuple = DEFAULT_CRITERION_DISKS
    hs_epsilons: tuple = DEFAULT_HS_EPSILONS
    c_report: float = 10.0
    schatten: bool = True
    criterion: bool = True


INTERIOR_RADII = (0.0, 0.25, 0.5)


def berezin_disk_log_sup(t, u, phi, quad, log_ring_sups, n_angles=64):
    """log sup of B_phi over the protocol rings and a few interior circles.

    Adjoint kernel norms and B_phi are both lower bounds for the squared
    operator norm, so the comparison needs B_phi over the whole disk, not
    only near the boundary where a compact operator makes it small.
    """
    vals = [float(np.max(log_ring_sups)), log_phi_berezin(t, u, phi, 0.0, quad)]
    for r in INTERIOR_RADII[1:]:
        vals.append(float(np.max(log_phi_berezin_ring(t, u, phi, r, quad, n_angles))))
    return max(vals)


def necessary_checks(t, u, phi, z_points, log_sup):
    """Adjoint kernel norms |u|^2 K(phi z, phi z)/K(z, z) against sup B."""
    vals = np.array([adjoint_kernel_norm(t, u, phi, z) for z in z_points])
    sup = math.exp(min(log_sup, 700.0))
    return {"adjoint_kernel_max": float(vals.max()),
            "berezin_sup": sup,
            "adjoint_below_sup": bool(vals.max() <= sup * (1 + 1e-2))}


def classify(t: KernelTable, u: MultiplierSpec, phi: MapSpec, quad: DiskQuadrature,
             options: ClassifyOptions = ClassifyOptions()) -> ClassificationReport:
    """Run every verdict for u C_phi and cross-check them."""
    angular = global_angular_verdict(phi)
    log_sups = _ring_sups(t, u, phi, quad, options.rings)
    bnd = classify_boundedness(t, u, phi, quad, options.rings, options.ratio_rings, log_sups)
    cmp_ = classify_compactness(t, u, phi, quad, options.rings, options.ratio_rings, bnd, angular)
    ess = essential_norm_bracket(t, u, phi, quad, options.rings, options.c_report, log_sups)
    schat = {}
    lattice_ok = True
    if options.schatten and bnd.verdict != "Unbounded":
        lam1, lam2 = pullback_spectrum(t, u, phi, options.N, quad)
    else:
        lam1 = lam2 = None
    for p in options.p_values:
        entry = {}
        if lam1 is not None:
            r = schatten_from_spectrum(lam1, lam2, p, options.N)
            entry["galerkin"] = {"N": r.N, "value_N": r.value_N, "value_2N": r.value_2N,
                                 "relative_change": r.relative_change, "verdict": r.verdict}
        elif options.schatten:
            entry["galerkin"] = {"verdict": "Infinite", "note": "operator unbounded"}
        if options.criterion:
            c = schatten_criterion(t, u, phi, p, quad, options.criterion_disks)
            entry["criterion"] = {"radii": c.radii, "log_partials": c.log_partials,
                                  "verdict": c.verdict}
        if p == 2 and options.criterion:
            h = hilbert_schmidt_test(t.weight, u, phi, epsilons=options.hs_epsilons)
            entry["hilbert_schmidt"] = {"radii": h.radii, "log_partials": h.log_partials,
                                        "verdict": h.verdict}
        verdicts = {v["verdict"] for v in entry.values() if v["verdict"] != "Indeterminate"}
        entry["agree"] = len(verdicts) <= 1
        in_sp = verdicts == {"Finite"}
        if in_sp and cmp_.verdict == "NotCompact":
            lattice_ok = False
        schat[p] = entry
    if cmp_.verdict == "Compact" and bnd.verdict == "Unbounded":
        lattice_ok = False
    ring = options.rings.ring_points(options.rings.radii[0])
    checks = necessary_checks(t, u, phi, ring, berezin_disk_log_sup(t, u, phi, quad, log_sups))
    if u.is_one:
        checks["log_ratio_rings"] = bnd.ratio_log_rings
    checks["verdict_lattice"] = lattice_ok
    consistent = (bnd.consistent and cmp_.consistent and lattice_ok
                  and all(e["agree"] for e in schat.values()))
    return ClassificationReport(t.weight, phi, u, bnd, cmp_, ess, schat, checks, consistent,
                                angular)
