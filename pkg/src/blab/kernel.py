"""Reproducing kernel K(z, xi) = sum_k (z conj(xi))^k / (2 p_k).

Terms are summed with a per-point shift M = max_k (k log|x| - log 2p_k), so
the engine returns K = S * exp(M) with |S| of order one even when K itself
overflows.  Only the window of k where a term exceeds exp(-CUT) times the
largest one is visited.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numba as nb
import numpy as np

from .errors import ConfigurationError, DomainError, TruncationError
from .numerics import _GL_W, _GL_X, _log_moments_exp, log_moments
from .weights import WeightKind, WeightSpec, eval_log_weight, eval_tau, m_tau

CUT = 42.0
RESYNC = 32


# ---------------------------------------------------------------- engine

@nb.njit(cache=True)
def _count_below(dl, x):
    # number of entries of the increasing array dl that are < x
    lo, hi = 0, dl.size
    while lo < hi:
        mid = (lo + hi) // 2
        if dl[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@nb.njit(cache=True)
def _fold(x, l2p, ratio, dl, nbins, cut):
    """Fold the scaled series of each x[i] into nbins residue classes of k.

    Returns (bins, shift, abssum, trunc) where
    sum_k x^k/(2p_k) e^{ik theta} = exp(shift) * sum_b bins[b] e^{ib theta}
    for theta on the nbins-th roots of unity, abssum is the scaled sum of
    |terms| and trunc flags points whose window reached the table end.
    """
    n = x.size
    kmax = l2p.size - 1
    bins = np.zeros((n, nbins), dtype=np.complex128)
    shift = np.empty(n)
    abssum = np.zeros(n)
    trunc = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        xi = x[i]
        ax = abs(xi)
        if ax == 0.0:
            shift[i] = -l2p[0]
            bins[i, 0] = 1.0
            abssum[i] = 1.0
            continue
        lr = math.log(ax)
        th = math.atan2(xi.imag, xi.real)
        ks = _count_below(dl, lr)
        m = ks * lr - l2p[ks]
        shift[i] = m
        # window start: first k <= ks with log term >= -cut
        lo, hi = 0, ks
        while lo < hi:
            mid = (lo + hi) // 2
            if mid * lr - l2p[mid] - m >= -cut:
                hi = mid
            else:
                lo = mid + 1
        k0 = lo
        # window end: last k >= ks with log term >= -cut
        lo, hi = ks, kmax
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if mid * lr - l2p[mid] - m >= -cut:
                lo = mid
            else:
                hi = mid - 1
        k1 = lo
        if k1 == kmax and kmax * lr - l2p[kmax] - m > -cut:
            trunc[i] = True
        term = 0j
        acc = 0.0
        for k in range(k0, k1 + 1):
            if (k - k0) % 32 == 0:
                mag = math.exp(k * lr - l2p[k] - m)
                ang = (k * th) % (2.0 * math.pi)
                term = complex(mag * math.cos(ang), mag * math.sin(ang))
            else:
                term = term * xi * ratio[k]
            bins[i, k % nbins] += term
            acc += abs(term)
        abssum[i] = acc
    return bins, shift, abssum, trunc


@nb.njit(cache=True)
def _log_sum_real(x, l2p, dl, cut):
    """log sum_k x^k/(2p_k) for x >= 0, with no cancellation."""
    n = x.size
    kmax = l2p.size - 1
    out = np.empty(n)
    trunc = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        if x[i] == 0.0:
            out[i] = -l2p[0]
            continue
        lr = math.log(x[i])
        ks = _count_below(dl, lr)
        m = ks * lr - l2p[ks]
        s = 0.0
        k = ks
        while k >= 0:
            v = k * lr - l2p[k] - m
            if v < -cut:
                break
            s += math.exp(v)
            k -= 1
        k = ks + 1
        while k <= kmax:
            v = k * lr - l2p[k] - m
            if v < -cut:
                break
            s += math.exp(v)
            k += 1
        if k > kmax and kmax * lr - l2p[kmax] - m > -cut:
            trunc[i] = True
        out[i] = m + math.log(s)
    return out, trunc


# ---------------------------------------------------------------- table

@dataclass(frozen=True, eq=False)
class KernelTable:
    """Moments p_0..p_K (stored as logs) with a certified radius.

    The series is certified for |z conj(xi)| <= certified_radius**2: there
    the tail beyond K_max is below `tol` times the diagonal sum.
    """

    weight: WeightSpec
    log_p: np.ndarray
    certified_radius: float
    tol: float = 1e-14
    l2p: np.ndarray = field(init=False, repr=False)
    dl: np.ndarray = field(init=False, repr=False)
    ratio: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        lp = np.ascontiguousarray(self.log_p, dtype=float)
        object.__setattr__(self, "log_p", lp)
        l2p = lp + math.log(2.0)
        object.__setattr__(self, "l2p", l2p)
        dl = np.diff(l2p)
        object.__setattr__(self, "dl", np.maximum.accumulate(dl))
        ratio = np.empty_like(l2p)
        ratio[0] = 1.0
        ratio[1:] = np.exp(-dl)
        object.__setattr__(self, "ratio", ratio)

    @property
    def k_max(self):
        return self.log_p.size - 1

    @property
    def moments(self):
        return np.exp(self.log_p)

    @property
    def norms(self):
        return 2.0 * np.exp(self.log_p)

    @property
    def max_product(self):
        return self.certified_radius ** 2

    def check_product(self, x):
        ax = np.abs(np.asarray(x))
        if ax.size and ax.max() > self.max_product * (1 + 1e-12):
            need = _estimate_kmax(self.weight, math.sqrt(float(ax.max())) if ax.max() < 1 else 0.9999999)
            raise TruncationError(
                f"|z conj(xi)| = {ax.max():.6g} exceeds certified {self.max_product:.6g}",
                required_kmax=need)

    # -- raw engine access
    def fold(self, x, nbins=1):
        x = np.ascontiguousarray(np.atleast_1d(x), dtype=np.complex128)
        self.check_product(x)
        bins, shift, abssum, trunc = _fold(x, self.l2p, self.ratio, self.dl, int(nbins), CUT)
        if trunc.any():
            raise TruncationError("series window reached the end of the moment table",
                                  required_kmax=2 * self.k_max)
        return bins, shift, abssum

    def log_series_abs(self, rho):
        """log sum_k rho^k/(2p_k) for rho >= 0."""
        rho = np.ascontiguousarray(np.atleast_1d(rho), dtype=float)
        self.check_product(rho)
        out, trunc = _log_sum_real(rho, self.l2p, self.dl, CUT)
        if trunc.any():
            raise TruncationError("series window reached the end of the moment table",
                                  required_kmax=2 * self.k_max)
        return out

    def to_json_dict(self):
        d = dict(self.weight.to_dict())
        d.update({
            "K_max": self.k_max,
            "tol": self.tol,
            "certified_radius": self.certified_radius,
            "p": [float(v) for v in np.exp(self.log_p)],
            "log_p": [float(v) for v in self.log_p],
        })
        return d

    @classmethod
    def from_json_dict(cls, d):
        w = WeightSpec.from_dict(d)
        if "log_p" in d:
            lp = np.asarray(d["log_p"], dtype=float)
        else:
            lp = np.log(np.asarray(d["p"], dtype=float))
        if lp.size != int(d["K_max"]) + 1:
            raise ConfigurationError("moment table length does not match K_max")
        return cls(weight=w, log_p=lp, certified_radius=float(d["certified_radius"]),
                   tol=float(d.get("tol", 1e-14)))


def export_table(t: KernelTable, path):
    Path(path).write_text(json.dumps(t.to_json_dict()))


def import_table(path) -> KernelTable:
    return KernelTable.from_json_dict(json.loads(Path(path).read_text()))


def _single_log_moment(w, k):
    if w.kind is not WeightKind.EXPONENTIAL:
        return float(log_moments(w, k, start=k)[0])
    return float(_log_moments_exp(w.alpha, w.c, w.beta, int(k), int(k) + 1,
                                  _GL_X, _GL_W, 8, 60.0)[0])


def _log_term(w, k, lr):
    return k * lr - math.log(2.0) - _single_log_moment(w, k)


def _estimate_kmax(w: WeightSpec, radius, cut=CUT + 8.0):
    """Index past which log terms of the diagonal series at `radius` fall
    more than `cut` below their maximum."""
    lr = 2.0 * math.log(radius)
    # terms are log-concave in k: walk up powers of two to bracket the peak
    k, best = 1, _log_term(w, 0, lr)
    prev = best
    while True:
        v = _log_term(w, k, lr)
        best = max(best, v)
        if v < prev and v < best - cut:
            break
        prev = v
        k *= 2
        if k > 1 << 28:
            raise TruncationError("kernel series does not decay at this radius")
    lo, hi = k // 2, k
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _log_term(w, mid, lr) < best - cut and _log_term(w, mid, lr) < _log_term(w, mid - 1, lr):
            hi = mid
        else:
            lo = mid
    return hi


def _tail_certified(l2p, dl, radius, tol):
    lr = 2.0 * math.log(radius)
    kmax = l2p.size - 1
    if dl[-1] <= lr:
        return False
    q = math.exp(lr - dl[-1])
    log_tail = kmax * lr - l2p[kmax] + math.log(q / (1.0 - q))
    log_total, _ = _log_sum_real(np.array([radius ** 2]), l2p, dl, 60.0)
    return log_tail < math.log(tol) + log_total[0]


def _cache_path(w, tol):
    root = os.environ.get("BLAB_CACHE_DIR")
    if not root:
        return None
    safe = w.key().replace("'", "").replace("=", "-")
    return Path(root) / f"moments_{safe}_tol-{tol:.0e}.npz"


_MEMO: dict = {}


def _moments_upto(w: WeightSpec, k_max, tol):
    """log p_0..p_k_max, reusing in-process and on-disk caches."""
    key = (w.key(), tol)
    have = _MEMO.get(key)
    path = _cache_path(w, tol)
    if have is None and path is not None and path.exists():
        try:
            have = np.load(path)["log_p"]
        except (OSError, KeyError, ValueError):
            have = None
    if have is not None and have.size > k_max:
        return have[: k_max + 1]
    start = 0 if have is None else have.size
    extra = log_moments(w, k_max, start=start)
    lp = extra if have is None else np.concatenate([have, extra])
    _MEMO[key] = lp
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, log_p=lp, K_max=lp.size - 1, tol=tol)
        os.replace(tmp, path)
    return lp


def build_kernel_table(w: WeightSpec, target_radius=0.95, tol=1e-14, k_cap=4_000_000) -> KernelTable:
    """Moment table whose truncation is certified up to target_radius."""
    if not 0 < target_radius < 1:
        raise ConfigurationError("target_radius must lie in (0, 1)")
    if not 0 < tol < 1:
        raise ConfigurationError("tol must lie in (0, 1)")
    k = max(64, int(1.15 * _estimate_kmax(w, target_radius)) + 64)
    while True:
        if k > k_cap:
            raise TruncationError(f"radius {target_radius} needs more than {k_cap} moments",
                                  required_kmax=k)
        lp = _moments_upto(w, k, tol)
        t = KernelTable(weight=w, log_p=lp, certified_radius=float(target_radius), tol=tol)
        if _tail_certified(t.l2p, t.dl, target_radius, tol):
            return t
        k *= 2


# ---------------------------------------------------------------- evaluation

def _as_points(z):
    z = np.asarray(z, dtype=np.complex128)
    if np.any(np.abs(z) >= 1):
        raise DomainError("points must lie in the open unit disk")
    return z


def log_kernel_diag(t: KernelTable, z):
    """log K(z, z), finite even when K overflows."""
    z = _as_points(z)
    out = t.log_series_abs(np.abs(z).ravel() ** 2).reshape(z.shape)
    return float(out) if out.ndim == 0 else out


def kernel_scaled(t: KernelTable, z, xi):
    """(S, M, A) with K(z, xi) = S exp(M) and A exp(M) the sum of |terms|."""
    z, xi = np.broadcast_arrays(_as_points(z), _as_points(xi))
    x = (z * np.conj(xi)).ravel()
    bins, shift, abssum = t.fold(x, 1)
    shape = z.shape
    return bins[:, 0].reshape(shape), shift.reshape(shape), abssum.reshape(shape)


def kernel_eval(t: KernelTable, z, xi):
    s, m, _ = kernel_scaled(t, z, xi)
    with np.errstate(over="ignore"):
        out = s * np.exp(m)
    return complex(out) if out.ndim == 0 else out


def log_abs_kernel(t: KernelTable, z, xi):
    s, m, _ = kernel_scaled(t, z, xi)
    with np.errstate(divide="ignore"):
        out = np.log(np.abs(s)) + m
    return float(out) if out.ndim == 0 else out


def normalized_kernel(t: KernelTable, z, xi):
    """k_z(xi) = K(xi, z) / sqrt(K(z, z))."""
    s, m, _ = kernel_scaled(t, xi, z)
    zz = np.broadcast_to(np.asarray(z), np.shape(s))
    out = s * np.exp(m - 0.5 * log_kernel_diag(t, zz))
    return complex(out) if out.ndim == 0 else out


def ring_kernel_values(t: KernelTable, radius, n_angles, w):
    """K(radius e^{2 pi i m/n}, w_i) for all m and atoms w_i.

    Returns (V, shift) with K = V[i, m] * exp(shift[i]).
    """
    w = np.ascontiguousarray(np.atleast_1d(w), dtype=np.complex128)
    bins, shift, _ = t.fold(radius * np.conj(w), n_angles)
    return np.fft.ifft(bins, axis=1) * n_angles, shift


# ---------------------------------------------------------------- checks

@dataclass
class DiagonalStats:
    delta: float
    diag_min: float
    diag_max: float
    offdiag_min: float
    offdiag_max: float
    radii: np.ndarray
    log_diag: np.ndarray

    @property
    def diag_ratio(self):
        return self.diag_max / self.diag_min


def check_diagonal_estimate(t: KernelTable, ring, delta, n_xi=24, seed=0):
    """K(z,z) omega tau^2 over the ring and |K(z,xi)|^2/(K(z,z)K(xi,xi))
    for xi sampled in D(delta tau(z))."""
    w = t.weight
    if not 0 < delta < m_tau(w) / 2:
        raise DomainError(f"delta must lie in (0, m_tau/2) = (0, {m_tau(w) / 2:.6g})")
    r = np.asarray(ring, dtype=float)
    if r.max() > t.certified_radius:
        raise TruncationError("ring exceeds the certified radius",
                              required_kmax=_estimate_kmax(w, float(r.max())))
    ld = log_kernel_diag(t, r) + eval_log_weight(w, r) + 2 * np.log(eval_tau(w, r))
    rng = np.random.default_rng(seed)
    lo, hi = 1.0, 1.0
    for rz in r:
        rad = delta * eval_tau(w, rz)
        ang = rng.uniform(0, 2 * np.pi, n_xi)
        rr = rad * np.sqrt(rng.uniform(0, 1, n_xi))
        xi = rz + rr * np.exp(1j * ang)
        xi = xi[np.abs(xi) <= t.certified_radius]
        if xi.size == 0:
            continue
        la = 2 * log_abs_kernel(t, rz, xi) - log_kernel_diag(t, rz) - log_kernel_diag(t, xi)
        v = np.exp(la)
        lo, hi = min(lo, float(v.min())), max(hi, float(v.max()))
    e = np.exp(ld - ld.max())
    return DiagonalStats(delta=float(delta), diag_min=float(e.min() * math.exp(ld.max())),
                         diag_max=float(math.exp(ld.max())), offdiag_min=lo, offdiag_max=hi,
                         radii=r, log_diag=ld)


@dataclass
class OffDiagonalFit:
    sigma: float
    intercept: float
    r2: float
    bound_constant: float
    n_used: int
    n_skipped: int
    x: np.ndarray
    y: np.ndarray


def check_offdiagonal_decay(t: KernelTable, pairs, distances, min_distance=2.0,
                            cancellation=1e-12):
    """Fit y = a - sigma x with y = log(|K| omega^(1/2) omega^(1/2) tau tau) and
    x the tau-distance, over pairs with x > min_distance."""
    w = t.weight
    z = np.array([p[0] for p in pairs], dtype=complex)
    xi = np.array([p[1] for p in pairs], dtype=complex)
    x = np.asarray(distances, dtype=float)
    s, m, a = kernel_scaled(t, z, xi)
    with np.errstate(divide="ignore"):
        y = (np.log(np.abs(s)) + m
             + 0.5 * (eval_log_weight(w, np.abs(z)) + eval_log_weight(w, np.abs(xi)))
             + np.log(eval_tau(w, np.abs(z))) + np.log(eval_tau(w, np.abs(xi))))
    ok = np.isfinite(y) & (np.abs(s) >= cancellation * a)
    sel = ok & (x > min_distance)
    if sel.sum() < 3:
        raise ConfigurationError("fewer than three usable pairs beyond the distance cutoff")
    A = np.vstack([np.ones(sel.sum()), -x[sel]]).T
    coef, *_ = np.linalg.lstsq(A, y[sel], rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y[sel] - pred) ** 2))
    ss_tot = float(np.sum((y[sel] - y[sel].mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    sigma = float(coef[1])
    bound = float(np.max(y[ok] + sigma * x[ok] / 2))
    return OffDiagonalFit(sigma=sigma, intercept=float(coef[0]), r2=r2, bound_constant=bound,
                          n_used=int(ok.sum()), n_skipped=int((~ok).sum()), x=x, y=y)


def kernel_vanishing_on_compacts(t: KernelTable, compact_radius, z_sequence, n_samples=64):
    """M_n = max over |xi| <= compact_radius of |k_{z_n}(xi)|.

    By the maximum principle the max sits on the circle |xi| = compact_radius;
    the circle is sampled and the point aligned with z_n is always included.
    """
    if not 0 < compact_radius <= 0.5:
        raise DomainError("compact_radius must lie in (0, 0.5]")
    out = []
    for zn in np.atleast_1d(z_sequence):
        zn = complex(zn)
        ang = np.angle(zn) + 2 * np.pi * np.arange(n_samples) / n_samples
        xi = compact_radius * np.exp(1j * ang)
        out.append(float(np.max(np.abs(normalized_kernel(t, zn, xi)))))
    return np.array(out)


def reproducing_pairing(t: KernelTable, quad, f_values, z):
    """<f, K_z> by quadrature, for f sampled at the tensor nodes of `quad`.

    Each ring contributes one fold of rho_i * z and an FFT over its angles.
    """
    z = complex(z)
    n = quad.n_angular
    f = np.asarray(f_values, dtype=np.complex128).reshape(quad.radii.size, n)
    bins, shift, _ = t.fold(z * quad.radii.astype(np.complex128), n)
    V = np.fft.fft(bins, axis=1)
    lw = np.log(quad.ring_masses / n) + eval_log_weight(t.weight, quad.radii) + shift
    keep = lw > lw.max() - 80.0
    return complex(np.sum(np.exp(lw[keep])[:, None] * f[keep] * V[keep]))
