import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blab.errors import DomainError, TruncationError
from blab.kernel import (build_kernel_table, check_diagonal_estimate, export_table,
                         import_table, kernel_eval, kernel_vanishing_on_compacts,
                         log_abs_kernel, log_kernel_diag, normalized_kernel, reproducing_pairing,
                         ring_kernel_values)
from blab.numerics import build_quadrature
from blab.weights import WeightSpec, m_tau

# log K(r, r) from scripts/oracles.py (mpmath series with mpmath moments)
ORACLE_LOG_DIAG = [
    ((1.0, 1.0, 0.0), 0.5, 4.185104039409353),
    ((1.0, 1.0, 0.0), 0.8, 9.407184753006879),
    ((2.0, 1.0, 0.0), 0.5, 7.588932565262684),
]


@pytest.fixture(scope="module")
def t_unw():
    return build_kernel_table(WeightSpec.unweighted(), 0.95)


def _disk_points(rng, n, rmax):
    return rmax * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))


def test_unweighted_closed_form(t_unw, rng):
    z, xi = _disk_points(rng, 500, 0.9), _disk_points(rng, 500, 0.9)
    K = kernel_eval(t_unw, z, xi)
    exact = 1 / (1 - z * np.conj(xi)) ** 2
    assert np.max(np.abs(K - exact) / np.abs(exact)) < 1e-12


@pytest.mark.parametrize("params,r,expected", ORACLE_LOG_DIAG)
def test_log_diag_oracle(params, r, expected):
    t = build_kernel_table(WeightSpec.exponential(*params), 0.9)
    assert log_kernel_diag(t, r) == pytest.approx(expected, rel=1e-13)


@given(st.floats(0, 0.95), st.floats(0, 2 * np.pi), st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_hermitian_symmetry_and_cauchy_schwarz(t11, r1, a1, r2, a2):
    z, xi = r1 * np.exp(1j * a1), r2 * np.exp(1j * a2)
    k1, k2 = kernel_eval(t11, z, xi), kernel_eval(t11, xi, z)
    log_bound = 0.5 * (log_kernel_diag(t11, z) + log_kernel_diag(t11, xi))
    # rounding scales with the Cauchy-Schwarz bound, not with |K| under cancellation
    assert abs(k1 - np.conj(k2)) <= 1e-13 * np.exp(log_bound)
    assert log_abs_kernel(t11, z, xi) <= log_bound + 1e-10


def test_normalized_kernel_unit_at_diagonal(t21):
    z = np.array([0.1, 0.5j, -0.8 + 0.1j])
    np.testing.assert_allclose(np.abs(normalized_kernel(t21, z, z)) ** 2,
                               np.exp(log_kernel_diag(t21, z)), rtol=1e-12)


def test_ring_values_match_pointwise(t21):
    w = np.array([0.3 + 0.2j, -0.5j])
    V, shift = ring_kernel_values(t21, 0.7, 16, w)
    pts = 0.7 * np.exp(2j * np.pi * np.arange(16) / 16)
    for i, wi in enumerate(w):
        direct = kernel_eval(t21, pts, wi)
        # FFT rounding is relative to the largest ring value
        np.testing.assert_allclose(V[i] * np.exp(shift[i]), direct,
                                   atol=1e-12 * np.abs(direct).max())


@pytest.mark.parametrize("deg", [0, 3, 10])
def test_reproducing_property(t21, q21, rng, deg):
    c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
    f = np.polynomial.polynomial.polyval(q21.points, c)
    for z in _disk_points(rng, 5, 0.8):
        fz = np.polynomial.polynomial.polyval(z, c)
        got = reproducing_pairing(t21, q21, f, z)
        assert abs(got - fz) < 1e-10 * max(abs(fz), 1.0)


def test_truncation_error_names_kmax(t21):
    with pytest.raises(TruncationError) as e:
        kernel_eval(t21, 0.99, 0.99)
    assert e.value.required_kmax > t21.k_max


def test_domain_error(t21):
    with pytest.raises(DomainError):
        log_kernel_diag(t21, 1.0)


def test_export_round_trip(t21, tmp_path):
    p = tmp_path / "moments.json"
    export_table(t21, p)
    t = import_table(p)
    assert t.k_max == t21.k_max and t.certified_radius == t21.certified_radius
    np.testing.assert_array_equal(t.log_p, t21.log_p)
    assert kernel_eval(t, 0.4, 0.3j) == kernel_eval(t21, 0.4, 0.3j)


def test_disk_cache_written(w21, t21):
    root = os.environ["BLAB_CACHE_DIR"]
    files = [f for f in os.listdir(root) if f.startswith("moments_")]
    assert files
    again = build_kernel_table(w21, 0.95)
    np.testing.assert_array_equal(again.log_p, t21.log_p)


def test_diagonal_estimate_ranges(t21, w21):
    stats = check_diagonal_estimate(t21, np.linspace(0.3, 0.95, 14), m_tau(w21) / 4)
    assert stats.diag_ratio < 100
    assert 1e-2 <= stats.offdiag_min <= stats.offdiag_max <= 1 + 1e-12


def test_diagonal_estimate_rejects_delta(t21, w21):
    with pytest.raises(DomainError):
        check_diagonal_estimate(t21, [0.5], m_tau(w21))


def test_vanishing_on_compacts(t11):
    zn = 1 - 2.0 ** -np.arange(2, 7)
    M = kernel_vanishing_on_compacts(t11, 0.5, zn)
    assert np.all(np.diff(M) < 0)
