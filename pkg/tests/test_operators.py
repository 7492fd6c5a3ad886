import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blab.errors import ConfigurationError, DomainError
from blab.geometry import build_covering
from blab.numerics import build_quadrature
from blab.operators import (DiscreteMeasure, adjoint_kernel_norm,
                            adjoint_kernel_norm_quadrature, averaging, berezin,
                            berezin_disk_log_sup, carleson_diagnostics, classify_boundedness,
                            necessary_checks, galerkin_matrix,
                            hilbert_schmidt_test, log_berezin, log_berezin_ring, phi_berezin,
                            pullback_measure, schatten_norm, tail_projection_norm,
                            toeplitz_matrix)
from blab.symbols import MapSpec, MultiplierSpec
from blab.weights import WeightSpec, eval_log_weight, eval_tau, m_tau

ONE = MultiplierSpec.one()
SQUARE = MapSpec.polynomial([0, 0, 1])


@pytest.fixture(scope="module")
def qs():
    return build_quadrature(128, 256, 2)


def test_toeplitz_of_area_measure_is_identity(t11, qs):
    M = toeplitz_matrix(t11, DiscreteMeasure.from_quadrature(qs), 40)
    assert np.abs(M - np.eye(40)).max() < 1e-12


def test_toeplitz_single_atom_at_origin(t11, w11):
    M = toeplitz_matrix(t11, DiscreteMeasure.from_atoms([0.0], [0.3]), 10)
    expected = np.zeros((10, 10))
    expected[0, 0] = 0.3 * math.exp(eval_log_weight(w11, 0.0) - t11.l2p[0])
    np.testing.assert_allclose(M, expected, atol=1e-15)


def test_toeplitz_empty_and_cap(t11):
    assert not toeplitz_matrix(t11, DiscreteMeasure.empty(), 5).any()
    with pytest.raises(ConfigurationError):
        toeplitz_matrix(t11, DiscreteMeasure.empty(), 401)


def test_phi_berezin_is_berezin_of_pullback(t11, w11, qs):
    for z in (0.3, 0.6j, -0.85):
        a = phi_berezin(t11, ONE, SQUARE, z, qs)
        b = berezin(t11, pullback_measure(w11, qs, SQUARE, ONE), z)
        assert a == pytest.approx(b, rel=1e-10)


def test_berezin_ring_matches_points(t11, qs):
    mu = DiscreteMeasure.from_atoms([0.2, -0.5j, 0.7 + 0.1j], [1.0, 0.5, 2.0])
    ring = log_berezin_ring(t11, mu, 0.6, 8)
    pts = 0.6 * np.exp(2j * np.pi * np.arange(8) / 8)
    direct = [log_berezin(t11, mu, z) for z in pts]
    np.testing.assert_allclose(ring, direct, rtol=1e-11)


def test_berezin_of_area_measure(t11, qs):
    mu = DiscreteMeasure.from_quadrature(qs)
    for z in (0.0, 0.5, 0.8j):
        assert berezin(t11, mu, z) == pytest.approx(1.0, abs=1e-10)


def test_dilation_galerkin_diagonal(t11, qs):
    G = galerkin_matrix(t11, ONE, MapSpec.dilation(0.5), 30, qs)
    np.testing.assert_allclose(np.diag(G), 0.5 ** np.arange(30), atol=1e-12)
    assert np.abs(G - np.diag(np.diag(G))).max() < 1e-10


def test_tail_projection_dilation(t11, qs):
    assert tail_projection_norm(t11, ONE, MapSpec.dilation(0.5), 5, 30, qs) == \
        pytest.approx(0.5 ** 5, rel=1e-6)
    with pytest.raises(ConfigurationError):
        tail_projection_norm(t11, ONE, MapSpec.dilation(0.5), 30, 30, qs)


def test_schatten_dilation_and_monotone_in_p(t11, qs):
    phi = MapSpec.dilation(0.5)
    s2 = schatten_norm(t11, ONE, phi, 2, 50, qs)
    s1 = schatten_norm(t11, ONE, phi, 1, 50, qs)
    assert s2.value_2N == pytest.approx(1 / math.sqrt(0.75), rel=1e-9)
    assert s1.value_2N == pytest.approx(2.0, rel=1e-9)
    assert s2.verdict == s1.verdict == "Finite"
    s4 = schatten_norm(t11, ONE, phi, 4, 50, qs)
    assert s4.value_2N <= s2.value_2N <= s1.value_2N


def test_zero_multiplier(t11, qs):
    zero = MultiplierSpec.polynomial([0])
    r = schatten_norm(t11, zero, SQUARE, 2, 20, qs)
    assert r.value_2N == 0 and r.verdict == "Finite"
    assert hilbert_schmidt_test(t11.weight, zero, SQUARE).verdict == "Finite"
    assert adjoint_kernel_norm(t11, zero, SQUARE, 0.5) == 0.0


def test_adjoint_kernel_norm_paths_agree(t11, qs):
    for z in (0.2, 0.5j, -0.7):
        a = adjoint_kernel_norm(t11, ONE, SQUARE, z)
        b = adjoint_kernel_norm_quadrature(t11, ONE, SQUARE, z, qs)
        assert a == pytest.approx(b, rel=1e-10)


def test_adjoint_norm_below_berezin_sup(t11, qs):
    b = classify_boundedness(t11, ONE, SQUARE, qs)
    sup = math.exp(berezin_disk_log_sup(t11, ONE, SQUARE, qs, b.log_sup_rings))
    pts = 0.8 * np.exp(2j * np.pi * np.arange(16) / 16)
    assert max(adjoint_kernel_norm(t11, ONE, SQUARE, z) for z in pts) <= sup * 1.01
    assert necessary_checks(t11, ONE, SQUARE, pts, math.log(sup))["adjoint_below_sup"]


def test_averaging_single_atom(w21):
    mu = DiscreteMeasure.from_atoms([0.5], [2.0])
    delta = m_tau(w21) / 2
    r = delta * eval_tau(w21, 0.5)
    assert averaging(w21, mu, 0.5, delta) == pytest.approx(2.0 / r ** 2)
    assert averaging(w21, mu, -0.5, delta) == 0.0
    with pytest.raises(DomainError):
        averaging(w21, mu, 0.5, m_tau(w21))


def test_carleson_area_measure(w21, t21):
    q = build_quadrature(64, 512, 2)
    mu = DiscreteMeasure.from_quadrature(q)
    delta = m_tau(w21) / 2
    cov = build_covering(w21, delta, 1e-2, 40)
    tp = np.array([0.0, 0.3, 0.5j])
    rep = carleson_diagnostics(w21, t21, mu, delta, tp, cov)
    assert rep.sup_berezin == pytest.approx(1.0, abs=1e-8)
    assert 0 < rep.averbere_constant < math.inf


def test_measure_contracts():
    with pytest.raises(DomainError):
        DiscreteMeasure.from_atoms([1.0], [1.0])
    with pytest.raises(ConfigurationError):
        DiscreteMeasure.from_atoms([0.5], [-1.0])
    mu = DiscreteMeasure.from_atoms([0.1, 0.2], [1.0, 0.0])
    assert mu.total_mass == 1.0
    assert mu.restrict([True, False]).size == 1
    assert mu.scaled(math.log(2.0)).total_mass == pytest.approx(2.0)


@settings(max_examples=10)
@given(st.floats(0.1, 0.9))
def test_dilation_bounded(t11, qs, r):
    assert classify_boundedness(t11, ONE, MapSpec.dilation(r), qs).verdict == "Bounded"


def test_hilbert_schmidt_dilation_finite(w11):
    assert hilbert_schmidt_test(w11, ONE, MapSpec.dilation(0.5)).verdict == "Finite"
    assert hilbert_schmidt_test(w11, ONE, MapSpec.identity()).verdict == "Infinite"
