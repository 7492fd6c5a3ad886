import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blab.errors import ConfigurationError, DomainError, InapplicableError, ResolutionError
from blab.geometry import (AdaptedDisk, Horodisk, bergman_distance, build_covering,
                           comparability_check, distance_matrix, julia_containment,
                           nontangential_region, segment_distance)
from blab.symbols import MapSpec, angular_derivative
from blab.weights import WeightSpec, m_tau


def test_adapted_disk_radius(w21):
    d = AdaptedDisk(w21, 0.5, 0.1)
    assert d.radius == pytest.approx(0.1 * 0.25)
    assert d.contains(0.5 + 0.02) and not d.contains(0.5 + 0.03)
    with pytest.raises(DomainError):
        AdaptedDisk(w21, 0.5, m_tau(w21))


def test_comparability(w21):
    lo, hi = comparability_check(w21, 0.95, m_tau(w21) / 2)
    assert 0.5 < lo <= 1 <= hi < 2


def test_covering_small_grid():
    w = WeightSpec.unweighted()
    c = build_covering(w, m_tau(w) / 2, 1e-2, 100)
    assert c.separation_violations == 0
    assert c.uncovered == 0
    assert 0 < c.multiplicity < 49
    assert not c.pitch_certified


def test_covering_strict_resolution():
    w = WeightSpec.unweighted()
    with pytest.raises(ResolutionError):
        build_covering(w, 0.1, 1e-2, 100, strict=True)
    with pytest.raises(ConfigurationError):
        build_covering(w, 0.1, 0.1, 100)


def test_covering_json_export():
    w = WeightSpec.unweighted()
    c = build_covering(w, 0.1, 1e-2, 60)
    import json
    rows = json.loads(c.to_json())
    assert len(rows) == c.points.size
    assert rows[0]["radius"] == pytest.approx(c.radii[0])


@given(st.floats(0.01, 5.0), st.floats(0, 2 * np.pi), st.floats(0, 0.999), st.floats(0, 2 * np.pi))
def test_horodisk_forms_agree(k, a, r, th):
    h = Horodisk(np.exp(1j * a), k)
    z = r * np.exp(1j * th)
    lhs = abs(np.exp(1j * a) - z) ** 2 - k * (1 - r ** 2)
    if abs(lhs) > 1e-9:
        assert h.contains(z) == h.contains_disk_form(z)


def test_horodisk_geometry():
    h = Horodisk(1.0, 1.0)
    assert h.center == pytest.approx(0.5) and h.radius == pytest.approx(0.5)
    assert h.contains(0.5) and not h.contains(-0.1)
    with pytest.raises(DomainError):
        Horodisk(0.5, 1.0)


def test_nontangential_examples():
    assert nontangential_region(1.0, 2.0, 0.9)
    assert not nontangential_region(1.0, 2.0, 0.9 + 0.3j)
    assert nontangential_region(1.0, 2.0, np.array([0.5, -0.5])).tolist() == [True, False]
    with pytest.raises(DomainError):
        nontangential_region(1.0, 1.0, 0.5)


def test_julia_for_automorphism_is_equality():
    phi = MapSpec.hyperbolic(1 / 3)
    b = angular_derivative(phi, 1.0)
    rep = julia_containment(phi, 1.0, b.d_phi, b.eta, samples=200)
    assert rep.worst == pytest.approx(1.0, abs=1e-4)


def test_julia_square():
    phi = MapSpec.polynomial([0, 0, 1])
    rep = julia_containment(phi, 1j, 2.0, -1.0, samples=200)
    assert rep.worst <= 1 + 1e-9


def test_julia_inapplicable():
    with pytest.raises(InapplicableError):
        julia_containment(MapSpec.dilation(0.5), 1.0, math.inf, None)


def test_radial_distance_unweighted():
    w = WeightSpec.unweighted()
    exact = math.log(2.0)
    prev = math.inf
    for h in (1 / 4, 1 / 8, 1 / 16):
        g, s = bergman_distance(w, 0, 0.5, h)
        assert exact - 1e-12 <= g <= prev + 1e-12
        assert s == pytest.approx(exact, rel=1e-12)
        prev = g
    assert prev < exact * 1.05


def test_distance_matrix_properties(w21):
    pts = np.array([0, 0.5, 0.5j, -0.3, 0.2 - 0.6j])
    D = distance_matrix(w21, pts, resolution=1 / 32)
    np.testing.assert_array_equal(D, D.T)
    assert np.all(np.diag(D) == 0)
    n = pts.size
    for i in range(n):
        for j in range(n):
            assert np.all(D[i, j] <= D[i] + D[:, j] + 1e-12)
            if i != j:
                assert D[i, j] <= segment_distance(w21, pts[i], pts[j]) * 1.05


def test_distance_domain(w21):
    with pytest.raises(DomainError):
        bergman_distance(w21, 0, 1 - 1e-7)
    assert bergman_distance(w21, 0.3, 0.3) == (0.0, 0.0)
