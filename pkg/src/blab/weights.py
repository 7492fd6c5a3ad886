"""Radial weights, their length scale tau, and ratio diagnostics.

Everything is carried in log-space: for alpha=2, c=1 the weight at r=0.999
is exp(-1e6), so ratios of weights are always formed as differences of
logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError, NotSelfMapError


class WeightKind(str, Enum):
    EXPONENTIAL = "exp"
    UNWEIGHTED = "unweighted"
    STANDARD = "standard"


@dataclass(frozen=True)
class WeightSpec:
    """omega(r) = (1-r)^beta exp(-c/(1-r)^alpha), or one of two test weights.

    The test kinds (unweighted, and standard (1-r)^gamma) lie outside the
    exponential class; they exist because their kernels have closed forms.
    """

    alpha: float = 1.0
    c: float = 1.0
    beta: float = 0.0
    kind: WeightKind = WeightKind.EXPONENTIAL
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.kind is WeightKind.EXPONENTIAL:
            if not (self.alpha > 0 and self.c > 0 and self.beta >= 0):
                raise ConfigurationError(
                    f"need alpha>0, c>0, beta>=0; got {self.alpha}, {self.c}, {self.beta}")
        elif self.kind is WeightKind.STANDARD and not self.gamma > -1:
            raise ConfigurationError(f"standard weight needs gamma > -1, got {self.gamma}")

    @classmethod
    def exponential(cls, alpha=1.0, c=1.0, beta=0.0):
        return cls(alpha=float(alpha), c=float(c), beta=float(beta))

    @classmethod
    def unweighted(cls):
        return cls(kind=WeightKind.UNWEIGHTED)

    @classmethod
    def standard(cls, gamma):
        return cls(kind=WeightKind.STANDARD, gamma=float(gamma))

    @property
    def is_exponential(self):
        return self.kind is WeightKind.EXPONENTIAL

    @property
    def tau_exponent(self):
        """tau(r) = (1-r)^b with this b."""
        return 1.0 + self.alpha / 2.0 if self.is_exponential else 1.0

    def log_weight(self, r):
        return eval_log_weight(self, r)

    def tau(self, r):
        return eval_tau(self, r)

    def to_dict(self):
        if self.kind is WeightKind.EXPONENTIAL:
            return {"kind": "exp", "alpha": self.alpha, "c": self.c, "beta": self.beta}
        if self.kind is WeightKind.STANDARD:
            return {"kind": "standard", "gamma": self.gamma}
        return {"kind": "unweighted"}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigurationError("weight must be a JSON object")
        kind = d.get("kind", "exp")
        try:
            if kind == "exp":
                return cls.exponential(d["alpha"], d["c"], d.get("beta", 0.0))
            if kind == "standard":
                return cls.standard(d["gamma"])
            if kind == "unweighted":
                return cls.unweighted()
        except KeyError as e:
            raise ConfigurationError(f"weight config missing field {e}") from None
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad weight config: {e}") from None
        raise ConfigurationError(f"unknown weight kind {kind!r}")

    def key(self):
        """Stable identifier used for caching."""
        d = self.to_dict()
        return "_".join(f"{k}={d[k]!r}" for k in sorted(d))


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0) or np.any(r >= 1):
        raise DomainError("radius must satisfy 0 <= r < 1")
    return r


def _check_gap(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)) or np.any(t > 1):
        raise DomainError("boundary gap 1-r must lie in (0, 1]")
    return t


def log_weight_gap(w: WeightSpec, t):
    """log omega as a function of the gap t = 1 - r, accurate for tiny t."""
    t = _check_gap(t)
    if w.kind is WeightKind.EXPONENTIAL:
        out = -w.c * t ** (-w.alpha)
        if w.beta:
            out = out + w.beta * np.log(t)
        return out
    if w.kind is WeightKind.STANDARD:
        return w.gamma * np.log(t)
    return np.zeros_like(t)


def eval_log_weight(w: WeightSpec, r):
    r = _check_radius(r)
    out = log_weight_gap(w, 1.0 - r)
    return float(out) if out.ndim == 0 else out


def eval_tau(w: WeightSpec, r):
    r = _check_radius(r)
    out = (1.0 - r) ** w.tau_exponent
    return float(out) if out.ndim == 0 else out


def tau_gap(w: WeightSpec, t):
    return np.asarray(t, dtype=float) ** w.tau_exponent


def tau_prime(w: WeightSpec, r):
    """Radial derivative of tau."""
    r = _check_radius(r)
    b = w.tau_exponent
    return -b * (1.0 - r) ** (b - 1.0)


def laplacian_potential(w: WeightSpec, r):
    """Delta Phi = (Phi'' + Phi'/r)/4 for Phi = -log omega, at r > 0."""
    r = _check_radius(r)
    t = 1.0 - r
    if w.kind is WeightKind.EXPONENTIAL:
        a, c, b = w.alpha, w.c, w.beta
        d1 = c * a * t ** (-a - 1) + b / t
        d2 = c * a * (a + 1) * t ** (-a - 2) + b / t ** 2
    elif w.kind is WeightKind.STANDARD:
        d1 = w.gamma / t
        d2 = w.gamma / t ** 2
    else:
        d1 = d2 = np.zeros_like(t)
    return (d2 + d1 / r) / 4.0


@dataclass(frozen=True)
class TauConstants:
    c1: float
    c2: float
    m_tau: float = field(init=False)

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ConfigurationError("tau constants must be positive")
        object.__setattr__(self, "m_tau", min(1.0, 1.0 / self.c1, 1.0 / self.c2) / 4.0)


def tau_constants(w: WeightSpec) -> TauConstants:
    """Analytic constants: tau <= c1 (1-r) and |tau'| <= c2."""
    return TauConstants(c1=1.0, c2=w.tau_exponent)


def m_tau(w: WeightSpec) -> float:
    return tau_constants(w).m_tau


def chebyshev_grid(n=10_000, r_max=1.0 - 1e-8):
    """Chebyshev-spaced radii in [0, r_max], clustered at both ends."""
    x = 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))
    return x * r_max


@dataclass
class ClassWReport:
    c1: float
    c2: float
    m_tau: float
    tau_decreasing: bool
    tau_prime_to_zero: bool
    side_condition_increasing: bool
    side_condition_log: bool
    laplacian_bounds: tuple
    regular: bool
    regularity: dict
    in_class_W: bool

    def to_dict(self):
        return {
            "c1": self.c1,
            "c2": self.c2,
            "m_tau": self.m_tau,
            "regular": self.regular,
            "tau_decreasing": self.tau_decreasing,
            "tau_prime_to_zero": self.tau_prime_to_zero,
            "side_condition_increasing": self.side_condition_increasing,
            "side_condition_log": self.side_condition_log,
            "laplacian_bounds": list(self.laplacian_bounds),
            "regularity": {f"{d:.2f}": vals for d, vals in self.regularity.items()},
            "in_class_W": self.in_class_W,
        }


REGULARITY_DELTAS = (0.25, 0.5, 0.75)


def regularity_log_ratios(w: WeightSpec, delta, j_max=40):
    """log omega(1-delta t) - log omega(1-t) at t = 2^-j, j = 1..j_max."""
    t = 2.0 ** -np.arange(1, j_max + 1)
    return log_weight_gap(w, delta * t) - log_weight_gap(w, t)


def check_class_W(w: WeightSpec, grid=None) -> ClassWReport:
    r = chebyshev_grid() if grid is None else np.sort(_check_radius(grid))
    if r.size < 100:
        raise ConfigurationError("class-W grid needs at least 100 points")
    tau = eval_tau(w, r)
    dr = np.diff(r)
    keep = dr > 0
    slopes = np.abs(np.diff(tau))[keep] / dr[keep]
    c2 = float(slopes.max())
    c1 = float(np.max(tau / (1.0 - r)))
    consts = TauConstants(c1=c1, c2=c2)
    tau_decreasing = bool(np.all(np.diff(tau) < 0))
    tp = np.abs(tau_prime(w, r))
    tail = tp[-20:]
    tau_prime_to_zero = bool(tail[-1] < 1e-3 and np.all(np.diff(tail) <= 0))
    side_inc = bool(np.all(np.diff(tau * (1.0 - r) ** (-(1.0 + w.alpha / 2.0))) >= -1e-12))
    side_log_vals = tp * np.log(1.0 / tau)
    side_log = bool(side_log_vals[-1] < 1e-3)
    half = r[r >= 0.5]
    lap = tau_gap(w, 1.0 - half) ** 2 * laplacian_potential(w, half)
    lap_bounds = (float(lap.min()), float(lap.max()))
    regularity = {}
    regular = True
    for d in REGULARITY_DELTAS:
        vals = regularity_log_ratios(w, d)
        regularity[d] = [float(v) for v in vals]
        v4 = vals[3:]
        ok = bool(np.all(np.diff(v4) < 0) and v4[-1] < math.log(1e-6))
        regular = regular and ok
    in_w = (w.is_exponential and tau_decreasing and tau_prime_to_zero
            and side_inc and lap_bounds[0] > 0 and np.isfinite(lap_bounds[1]))
    return ClassWReport(
        c1=c1, c2=c2, m_tau=consts.m_tau,
        tau_decreasing=tau_decreasing, tau_prime_to_zero=tau_prime_to_zero,
        side_condition_increasing=side_inc, side_condition_log=side_log,
        laplacian_bounds=lap_bounds, regular=regular, regularity=regularity,
        in_class_W=bool(in_w),
    )


@dataclass(frozen=True)
class RatioDiagnostics:
    """Log weight ratio and tau ratio at one point z, with their two
    combinations: log of tau(z)/tau(phi z) * (omega(z)/omega(phi z))^(1/2)
    ("problem") and of its square ("compactcondi")."""

    log_ratio: float
    tau_ratio: float
    log_problem: float
    log_compactcondi: float


def _apply_map(phi, z):
    return phi.evaluate(z) if hasattr(phi, "evaluate") else phi(z)


def weight_ratio_diag(w: WeightSpec, phi, z) -> RatioDiagnostics:
    z = complex(z)
    if abs(z) >= 1:
        raise DomainError("z must lie in the open unit disk")
    fz = complex(_apply_map(phi, z))
    if not abs(fz) < 1:
        raise NotSelfMapError(f"|phi(z)| = {abs(fz)} >= 1")
    lr = eval_log_weight(w, abs(z)) - eval_log_weight(w, abs(fz))
    log_tr = w.tau_exponent * (math.log1p(-abs(z)) - math.log1p(-abs(fz)))
    return RatioDiagnostics(
        log_ratio=float(lr),
        tau_ratio=math.exp(log_tr),
        log_problem=log_tr + 0.5 * lr,
        log_compactcondi=2.0 * log_tr + lr,
    )


def log_weight_ratio(w: WeightSpec, z, fz):
    """Vectorized log(omega(z)/omega(fz))."""
    return eval_log_weight(w, np.abs(z)) - eval_log_weight(w, np.abs(fz))


@dataclass(frozen=True)
class RingProtocol:
    """Boundary rings |z| = 1 - eps used to approximate limits and limsups.

    "tends to zero": outermost ring max below `zero_threshold` and the last
    three ring maxima decreasing.  "bounded": every ring max below
    `bounded_factor` times the reference value at |z| = 1/2.
    """

    epsilons: tuple = (1e-2, 1e-3, 1e-4)
    n_angles: int = 64
    zero_threshold: float = 1e-3
    bounded_factor: float = 10.0

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) < 2 or any(not 0 < e < 1 for e in eps):
            raise ConfigurationError("ring epsilons must be in (0,1), at least two")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("ring epsilons must decrease toward the boundary")
        object.__setattr__(self, "epsilons", eps)

    @property
    def radii(self):
        return np.array([1.0 - e for e in self.epsilons])

    def ring_points(self, radius):
        th = 2 * np.pi * np.arange(self.n_angles) / self.n_angles
        return radius * np.exp(1j * th)

    def tends_to_zero(self, ring_max):
        m = np.asarray(ring_max, dtype=float)
        last = m[-3:]
        return bool(m[-1] < self.zero_threshold and np.all(np.diff(last) < 0))

    def tends_to_zero_log(self, log_ring_max):
        """Same test on log values, immune to underflow."""
        m = np.asarray(log_ring_max, dtype=float)
        return bool(m[-1] < math.log(self.zero_threshold) and np.all(np.diff(m[-3:]) < 0))

    def is_bounded(self, ring_max, reference):
        return bool(np.all(np.asarray(ring_max) < self.bounded_factor * reference))


def ratio_ring_stats(w: WeightSpec, phi, protocol: RingProtocol = RingProtocol()):
    """Max over each ring of omega(z)/omega(phi(z)) in log-space, plus the
    reference max at |z| = 1/2."""
    def ring_log_max(radius):
        z = protocol.ring_points(radius)
        fz = _apply_map(phi, z)
        if np.any(np.abs(fz) >= 1):
            raise NotSelfMapError("map leaves the disk on a protocol ring")
        return float(np.max(log_weight_ratio(w, z, fz)))

    ref = ring_log_max(0.5)
    rings = [ring_log_max(r) for r in protocol.radii]
    return ref, rings
