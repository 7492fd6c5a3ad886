import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blab.errors import ConfigurationError, NotSelfMapError
from blab.symbols import (MapSpec, MultiplierSpec, angular_derivative, global_angular_verdict,
                          radial_max)


def test_identity_angular_derivative():
    for zeta in np.exp(2j * np.pi * np.arange(4) / 4):
        b = angular_derivative(MapSpec.identity(), zeta)
        assert b.d_phi == pytest.approx(1.0, abs=1e-3)
        assert b.verdict == "finite"


def test_square_angular_derivative():
    phi = MapSpec.polynomial([0, 0, 1])
    for zeta in np.exp(2j * np.pi * np.arange(8) / 8):
        b = angular_derivative(phi, zeta)
        assert b.d_phi == pytest.approx(2.0, abs=0.02)
        assert abs(b.eta - zeta ** 2) < 1e-6


def test_hyperbolic_fixed_points():
    # (1-a)/(1+a) at the attracting point 1 and its inverse at -1
    phi = MapSpec.hyperbolic(1 / 3)
    s = angular_derivative(phi, 1.0).d_phi
    t = angular_derivative(phi, -1.0).d_phi
    assert s == pytest.approx(0.5, abs=1e-4)
    assert s * t == pytest.approx(1.0, rel=1e-3)


def test_dilation_has_infinite_derivative():
    b = angular_derivative(MapSpec.dilation(0.5), 1.0)
    assert b.verdict == "infinite" and b.d_phi == np.inf


def test_global_verdicts():
    assert global_angular_verdict(MapSpec.hyperbolic(1 / 3)).verdict == "SomeDerivativeBelowOne"
    assert global_angular_verdict(MapSpec.polynomial([0, 0, 1])).verdict == "AllAboveOne"
    assert global_angular_verdict(MapSpec.identity()).verdict == "BoundaryCase"


def test_not_self_map_rejected():
    with pytest.raises(NotSelfMapError):
        MapSpec.polynomial([0.5, 0.6])
    with pytest.raises(ConfigurationError):
        MapSpec.dilation(1.5)
    with pytest.raises(ConfigurationError):
        MapSpec.hyperbolic(1.0)


def test_composite_order():
    f = MapSpec.composite([MapSpec.dilation(0.5), MapSpec.hyperbolic(0.5)])
    assert f(0.4) == pytest.approx(0.7 / 1.1)
    assert not f.is_automorphism


@given(st.floats(-0.9, 0.9), st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
def test_automorphisms_preserve_disk(a, r, th):
    z = r * np.exp(1j * th)
    assert abs(MapSpec.hyperbolic(a)(z)) < 1
    assert abs(MapSpec.moebius(complex(a, 0) * 0.5j)(z)) < 1


@pytest.mark.parametrize("d", [
    {"kind": "identity"},
    {"kind": "poly", "coeffs": [0, [0, 0.5]]},
    {"kind": "dilation", "r": 0.3},
    {"kind": "hyperbolic", "a": 0.25},
    {"kind": "moebius", "a": [0.1, -0.2]},
    {"kind": "composite", "parts": [{"kind": "dilation", "r": 0.5}, {"kind": "poly", "coeffs": [0, 0, 1]}]},
])
def test_map_round_trip(d):
    m = MapSpec.from_dict(d)
    again = MapSpec.from_dict(m.to_dict())
    z = np.array([0.1 + 0.2j, -0.6])
    np.testing.assert_allclose(again(z), m(z))


@pytest.mark.parametrize("d", [{"kind": "poly"}, {"kind": "spiral"}, {"r": 0.5}, "dilation"])
def test_map_config_errors(d):
    with pytest.raises(ConfigurationError):
        MapSpec.from_dict(d)


def test_multipliers():
    assert MultiplierSpec.one().is_one
    assert MultiplierSpec.polynomial([0]).is_zero
    u = MultiplierSpec.kernel_power(0.5, 2.0)
    assert u(0.5) == pytest.approx(1 / 0.75 ** 2)
    assert u.log_abs2(0.5) == pytest.approx(-4 * np.log(0.75))
    assert MultiplierSpec.from_dict(u.to_dict()) == u
    with pytest.raises(ConfigurationError):
        MultiplierSpec.kernel_power(1.0, 1.0)


def test_radial_max():
    m, th = radial_max(MapSpec.polynomial([0.2j, 0.5]), 0.9)
    # |0.2i + 0.45 e^{i th}| is maximal at th = pi/2
    assert m == pytest.approx(0.65, abs=1e-12)
    assert th == pytest.approx(np.pi / 2, abs=1e-6)
