"""Analytic self-maps phi, multipliers u, and boundary diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, NotSelfMapError

CERT_RADIUS = 1.0 - 1e-4
CERT_POINTS = 10_000


class MapKind(str, Enum):
    POLY = "poly"
    DILATION = "dilation"
    HYPERBOLIC = "hyperbolic"
    MOEBIUS = "moebius"
    COMPOSITE = "composite"


AUTOMORPHISMS = (MapKind.HYPERBOLIC, MapKind.MOEBIUS)


def _complex_param(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    return complex(v)


@dataclass(frozen=True, eq=False)
class MapSpec:
    """An analytic self-map of the disk.

    Composite maps apply their parts left to right: parts=[f, g] is g(f(z)).
    """

    kind: MapKind
    coeffs: tuple = ()
    r: float = 1.0
    a: complex = 0j
    parts: tuple = ()
    name: str = ""
    self_map_certificate: float = field(default=float("nan"), init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind(self.kind))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if self.kind is MapKind.POLY and not self.coeffs:
            raise ConfigurationError("polynomial map needs coefficients")
        if self.kind is MapKind.DILATION and not 0 < abs(self.r) <= 1:
            raise ConfigurationError("dilation needs 0 < |r| <= 1")
        if self.kind is MapKind.HYPERBOLIC:
            a = complex(self.a)
            if a.imag != 0 or not -1 < a.real < 1:
                raise ConfigurationError("hyperbolic automorphism needs real a in (-1, 1)")
        if self.kind is MapKind.MOEBIUS and not abs(complex(self.a)) < 1:
            raise ConfigurationError("Moebius map needs |a| < 1")
        if self.kind is MapKind.COMPOSITE and not self.parts:
            raise ConfigurationError("composite map needs parts")
        th = 2 * np.pi * np.arange(CERT_POINTS) / CERT_POINTS
        cert = float(np.max(np.abs(self.evaluate(CERT_RADIUS * np.exp(1j * th)))))
        object.__setattr__(self, "self_map_certificate", cert)
        if not cert < 1 and not self.is_automorphism:
            raise NotSelfMapError(f"max |phi| on |z| = 1-1e-4 is {cert:.12g}")

    # constructors
    @classmethod
    def identity(cls):
        return cls(MapKind.POLY, coeffs=(0, 1), name="identity")

    @classmethod
    def polynomial(cls, coeffs, name=""):
        return cls(MapKind.POLY, coeffs=tuple(coeffs), name=name)

    @classmethod
    def dilation(cls, r):
        return cls(MapKind.DILATION, r=float(r))

    @classmethod
    def hyperbolic(cls, a):
        return cls(MapKind.HYPERBOLIC, a=complex(float(a)))

    @classmethod
    def moebius(cls, a):
        return cls(MapKind.MOEBIUS, a=complex(a))

    @classmethod
    def composite(cls, parts):
        return cls(MapKind.COMPOSITE, parts=tuple(parts))

    @property
    def is_automorphism(self):
        if self.kind in AUTOMORPHISMS:
            return True
        if self.kind is MapKind.COMPOSITE:
            return all(p.is_automorphism for p in self.parts)
        return False

    @property
    def label(self):
        if self.name:
            return self.name
        if self.kind is MapKind.POLY:
            return "poly(" + ",".join(_fmt(c) for c in self.coeffs) + ")"
        if self.kind is MapKind.DILATION:
            return f"dilation({self.r:g})"
        if self.kind in AUTOMORPHISMS:
            return f"{self.kind.value}({_fmt(self.a)})"
        return "composite(" + ";".join(p.label for p in self.parts) + ")"

    def evaluate(self, z):
        """phi(z); keeps the input precision (complex128 or clongdouble)."""
        z = np.asarray(z)
        if not np.iscomplexobj(z):
            z = z.astype(np.complex128)
        if self.kind is MapKind.POLY:
            out = np.zeros_like(z)
            for c in reversed(self.coeffs):
                out = out * z + c
            return out
        if self.kind is MapKind.DILATION:
            return self.r * z
        if self.kind is MapKind.HYPERBOLIC:
            a = self.a.real
            return (z + a) / (1 + a * z)
        if self.kind is MapKind.MOEBIUS:
            a = self.a
            return (z - a) / (1 - np.conj(a) * z)
        out = z
        for p in self.parts:
            out = p.evaluate(out)
        return out

    __call__ = evaluate

    def to_dict(self):
        if self.kind is MapKind.POLY:
            return {"kind": "poly", "coeffs": [_jsonc(c) for c in self.coeffs]}
        if self.kind is MapKind.DILATION:
            return {"kind": "dilation", "r": self.r}
        if self.kind is MapKind.HYPERBOLIC:
            return {"kind": "hyperbolic", "a": self.a.real}
        if self.kind is MapKind.MOEBIUS:
            return {"kind": "moebius", "a": _jsonc(self.a)}
        return {"kind": "composite", "parts": [p.to_dict() for p in self.parts]}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigurationError("map must be an object with a 'kind'")
        kind = d["kind"]
        try:
            if kind == "identity":
                return cls.identity()
            if kind == "poly":
                return cls.polynomial([_complex_param(c) for c in d["coeffs"]], d.get("name", ""))
            if kind == "dilation":
                return cls.dilation(d["r"])
            if kind == "hyperbolic":
                return cls.hyperbolic(d["a"])
            if kind == "moebius":
                return cls.moebius(_complex_param(d["a"]))
            if kind == "composite":
                return cls.composite([cls.from_dict(p) for p in d["parts"]])
        except KeyError as e:
            raise ConfigurationError(f"map config missing field {e}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, (ConfigurationError, NotSelfMapError)):
                raise
            raise ConfigurationError(f"bad map config: {e}") from None
        raise ConfigurationError(f"unknown map kind {kind!r}")


def _fmt(c):
    c = complex(c)
    return f"{c.real:g}" if c.imag == 0 else f"{c.real:g}{c.imag:+g}i"


def _jsonc(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


class MultiplierKind(str, Enum):
    ONE = "one"
    POLY = "poly"
    KERNEL_POWER = "kernel_power"


@dataclass(frozen=True)
class MultiplierSpec:
    """u = 1, a polynomial, or (1 - conj(w) z)^(-exponent) with |w| < 1."""

    kind: MultiplierKind = MultiplierKind.ONE
    coeffs: tuple = ()
    w: complex = 0j
    exponent: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MultiplierKind(self.kind))
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in self.coeffs))
        if self.kind is MultiplierKind.POLY and not self.coeffs:
            raise ConfigurationError("polynomial multiplier needs coefficients")
        if self.kind is MultiplierKind.KERNEL_POWER and not abs(complex(self.w)) < 1:
            raise ConfigurationError("kernel-power multiplier needs |w| < 1")

    @classmethod
    def one(cls):
        return cls()

    @classmethod
    def polynomial(cls, coeffs):
        return cls(MultiplierKind.POLY, coeffs=tuple(coeffs))

    @classmethod
    def kernel_power(cls, w, exponent):
        return cls(MultiplierKind.KERNEL_POWER, w=complex(w), exponent=float(exponent))

    @property
    def is_one(self):
        if self.kind is MultiplierKind.ONE:
            return True
        return self.kind is MultiplierKind.POLY and self.coeffs == (1 + 0j,)

    @property
    def is_zero(self):
        return self.kind is MultiplierKind.POLY and all(c == 0 for c in self.coeffs)

    @property
    def label(self):
        if self.kind is MultiplierKind.ONE:
            return "one"
        if self.kind is MultiplierKind.POLY:
            return "poly(" + ",".join(_fmt(c) for c in self.coeffs) + ")"
        return f"kernel_power({_fmt(self.w)},{self.exponent:g})"

    def evaluate(self, z):
        z = np.asarray(z, dtype=np.complex128)
        if self.kind is MultiplierKind.ONE:
            return np.ones_like(z)
        if self.kind is MultiplierKind.POLY:
            out = np.zeros_like(z)
            for c in reversed(self.coeffs):
                out = out * z + c
            return out
        return (1 - np.conj(self.w) * z) ** (-self.exponent)

    __call__ = evaluate

    def log_abs2(self, z):
        """log |u(z)|^2 (minus infinity at zeros)."""
        with np.errstate(divide="ignore"):
            return 2 * np.log(np.abs(self.evaluate(z)))

    def to_dict(self):
        if self.kind is MultiplierKind.ONE:
            return {"kind": "one"}
        if self.kind is MultiplierKind.POLY:
            return {"kind": "poly", "coeffs": [_jsonc(c) for c in self.coeffs]}
        return {"kind": "kernel_power", "w": _jsonc(self.w), "exponent": self.exponent}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigurationError("multiplier must be an object with a 'kind'")
        kind = d["kind"]
        try:
            if kind == "one":
                return cls.one()
            if kind == "poly":
                return cls.polynomial([_complex_param(c) for c in d["coeffs"]])
            if kind == "kernel_power":
                return cls.kernel_power(_complex_param(d["w"]), d["exponent"])
        except KeyError as e:
            raise ConfigurationError(f"multiplier config missing field {e}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"bad multiplier config: {e}") from None
        raise ConfigurationError(f"unknown multiplier kind {kind!r}")


# ---------------------------------------------------------------- boundary data

LADDER = np.arange(4, 41)
FAN = np.array([-np.pi / 4, -np.pi / 8, 0.0, np.pi / 8, np.pi / 4])
TAIL_START = 20
DIVERGENCE_LEVEL = 1e6


@dataclass
class BoundaryDiagnostics:
    zeta: complex
    d_phi: float
    eta: complex | None
    approach_data: dict
    verdict: str
    derivative_fd: complex | None = None
    note: str = ""


def _quotients(phi: MapSpec, zeta, psi):
    """q = (1-|phi(z)|)/(1-|z|) at z = zeta (1 - t e^{i psi}), t = 2^-j."""
    ld = np.longdouble
    t = ld(2.0) ** (-LADDER.astype(ld))
    zeta_l = np.clongdouble(zeta)
    rot = np.clongdouble(complex(math.cos(psi), math.sin(psi)))
    z = zeta_l * (1 - t * rot)
    fz = phi.evaluate(z)
    gap_z = 1 - np.abs(z)
    gap_f = 1 - np.abs(fz)
    return np.asarray(gap_f / gap_z, dtype=float), fz


def angular_derivative(phi: MapSpec, zeta) -> BoundaryDiagnostics:
    """liminf of (1-|phi(z)|)/(1-|z|) at zeta over a radial ladder and a fan
    of rays inside the nontangential region of aperture 2."""
    zeta = complex(zeta)
    zeta /= abs(zeta)
    data = {}
    tails = []
    diverging = []
    unsettled = []
    radial_f = None
    for psi in FAN:
        q, fz = _quotients(phi, zeta, psi)
        data[float(psi)] = q
        tail = q[LADDER >= TAIL_START]
        tails.append(float(tail.min()))
        diverging.append(bool(tail[-1] > DIVERGENCE_LEVEL and np.all(np.diff(tail) > 0)))
        spread = (tail.max() - tail.min()) / max(abs(tail.min()), 1e-300)
        unsettled.append(bool(spread > 0.1 and not diverging[-1]))
        if psi == 0.0:
            radial_f = fz
    if all(diverging):
        return BoundaryDiagnostics(zeta, math.inf, None, data, "infinite")
    d = min(t for t, dv in zip(tails, diverging) if not dv)
    verdict = "indeterminate" if any(unsettled) else "finite"
    eta = complex(radial_f[-1])
    deriv = None
    if d < DIVERGENCE_LEVEL:
        # difference quotient along the radius approximates phi'(zeta)
        j = np.searchsorted(LADDER, 24)
        t1, t2 = 2.0 ** -float(LADDER[j]), 2.0 ** -float(LADDER[j + 1])
        z1, z2 = zeta * (1 - t1), zeta * (1 - t2)
        f1, f2 = complex(radial_f[j]), complex(radial_f[j + 1])
        deriv = (f1 - f2) / (z1 - z2)
        eta = eta / abs(eta) if abs(eta) > 0 else eta
    note = "fan protocol assumes the nontangential liminf equals the unrestricted one"
    return BoundaryDiagnostics(zeta, float(d), eta, data, verdict, deriv, note)


def radial_max(phi: MapSpec, r, n_angles=256):
    """(max |phi(r e^{i theta})|, argmax theta), refined by ternary search."""
    if not 0 < r < 1:
        raise ConfigurationError("radius must lie in (0, 1)")
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    vals = np.abs(phi.evaluate(r * np.exp(1j * th)))
    i = int(np.argmax(vals))
    h = 2 * np.pi / n_angles
    lo, hi = th[i] - h, th[i] + h

    def f(x):
        return float(abs(phi.evaluate(np.complex128(r * np.exp(1j * x)))))

    for _ in range(100):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) < f(m2):
            lo = m1
        else:
            hi = m2
    best = 0.5 * (lo + hi)
    if f(best) < vals[i]:
        return float(vals[i]), float(th[i])
    return f(best), float(best % (2 * np.pi))


@dataclass
class AngularVerdict:
    verdict: str
    min_d: float
    per_zeta: list
    indeterminate: list
    tol: float

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "min_d": self.min_d,
            "d": [b.d_phi for b in self.per_zeta],
            "indeterminate": self.indeterminate,
        }


def global_angular_verdict(phi: MapSpec, n_boundary=16, tol=1e-2) -> AngularVerdict:
    zetas = np.exp(2j * np.pi * np.arange(n_boundary) / n_boundary)
    diags = [angular_derivative(phi, z) for z in zetas]
    ds = np.array([b.d_phi for b in diags])
    md = float(ds.min())
    if md < 1 - tol:
        v = "SomeDerivativeBelowOne"
    elif md > 1 + tol:
        v = "AllAboveOne"
    else:
        v = "BoundaryCase"
    ind = [i for i, b in enumerate(diags) if b.verdict == "indeterminate"]
    return AngularVerdict(v, md, diags, ind, tol)
