"""Run configuration shared by the command-line tools."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigurationError, NotSelfMapError
from .symbols import MapSpec, MultiplierSpec
from .weights import RingProtocol, WeightSpec


@dataclass
class QuadratureConfig:
    n_radial: int = 256
    n_angular: int = 1024


@dataclass
class KernelConfig:
    target_radius: float = 0.985
    tolerance: float = 1e-14


@dataclass
class CoveringConfig:
    delta_fraction: float = 0.5  # delta = delta_fraction * m_tau
    epsilon: float = 1e-2
    grid_size: int = 400
    multiplicity_bound: int = 49


def _ring_epsilons(r):
    eps = r.get("epsilons", (0.2, 0.1, 0.05)) if isinstance(r, dict) else r
    return tuple(float(e) for e in eps)


@dataclass
class RunConfig:
    weight: WeightSpec
    maps: list = field(default_factory=list)  # MapSpec or raw dicts
    multipliers: list = field(default_factory=lambda: [MultiplierSpec.one()])
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    rings: tuple = (0.2, 0.1, 0.05)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    schatten_p: tuple = (1.0, 2.0)
    matrix_dimension: int = 200
    covering: CoveringConfig = field(default_factory=CoveringConfig)
    output: str = "out"

    @property
    def ring_protocol(self):
        return RingProtocol(epsilons=self.rings)

    def to_dict(self):
        return {
            "weight": self.weight.to_dict(),
            "maps": [m.to_dict() if isinstance(m, MapSpec) else m for m in self.maps],
            "multipliers": [u.to_dict() for u in self.multipliers],
            "quadrature": asdict(self.quadrature),
            "rings": {"epsilons": list(self.rings)},
            "kernel": asdict(self.kernel),
            "schatten_p": list(self.schatten_p),
            "matrix_dimension": self.matrix_dimension,
            "covering": asdict(self.covering),
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigurationError("config must be a JSON object")
        if "weight" not in d:
            raise ConfigurationError("config needs a 'weight' entry")
        try:
            cfg = cls(
                weight=WeightSpec.from_dict(d["weight"]),
                maps=list(d.get("maps", [])),
                multipliers=[MultiplierSpec.from_dict(u)
                             for u in d.get("multipliers", [{"kind": "one"}])],
                quadrature=QuadratureConfig(**d.get("quadrature", {})),
                rings=_ring_epsilons(d.get("rings", {})),
                kernel=KernelConfig(**d.get("kernel", {})),
                schatten_p=tuple(float(p) for p in d.get("schatten_p", (1.0, 2.0))),
                matrix_dimension=int(d.get("matrix_dimension", 200)),
                covering=CoveringConfig(**d.get("covering", {})),
                output=str(d.get("output", "out")),
            )
        except (TypeError, ValueError, AttributeError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"bad config entry: {e}") from None
        cfg.validate()
        return cfg

    def validate(self):
        for m in self.maps:
            if isinstance(m, MapSpec):
                continue
            try:
                MapSpec.from_dict(m)
            except NotSelfMapError:
                pass  # reported per map by the classify command
        q = self.quadrature
        if q.n_radial < 16 or q.n_angular < 16:
            raise ConfigurationError("quadrature needs at least 16 radial and 16 angular nodes")
        self.ring_protocol  # raises on bad epsilons
        if max(1 - e for e in self.rings) ** 0.5 > self.kernel.target_radius + 1e-12:
            raise ConfigurationError("kernel target_radius must be at least sqrt(outer ring radius)")
        if not 0 < self.kernel.target_radius < 1:
            raise ConfigurationError("kernel target_radius must lie in (0, 1)")
        if not 0 < self.kernel.tolerance < 1:
            raise ConfigurationError("kernel tolerance must lie in (0, 1)")
        if any(p <= 0 for p in self.schatten_p):
            raise ConfigurationError("Schatten exponents must be positive")
        if not 0 < 2 * self.matrix_dimension <= 400:
            raise ConfigurationError("matrix_dimension must lie in 1..200 (2N re-run capped at 400)")
        c = self.covering
        if not 0 < c.epsilon <= 1e-2:
            raise ConfigurationError("covering epsilon must lie in (0, 1e-2]")


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"config is not valid JSON: {e}") from None
    return RunConfig.from_dict(raw)
