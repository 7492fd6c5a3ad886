import os
import tempfile

import hypothesis
import numpy as np
import pytest

# one moment cache per test session, shared by every table build
os.environ.setdefault("BLAB_CACHE_DIR", tempfile.mkdtemp(prefix="blab-cache-"))

from blab.kernel import build_kernel_table  # noqa: E402
from blab.numerics import build_quadrature, default_boundary_exponent  # noqa: E402
from blab.weights import WeightSpec  # noqa: E402

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.load_profile("default")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def w11():
    return WeightSpec.exponential(1.0, 1.0, 0.0)


@pytest.fixture(scope="session")
def w21():
    return WeightSpec.exponential(2.0, 1.0, 0.0)


@pytest.fixture(scope="session")
def t11(w11):
    return build_kernel_table(w11, 0.985)


@pytest.fixture(scope="session")
def t21(w21):
    return build_kernel_table(w21, 0.95)


@pytest.fixture(scope="session")
def q11(w11):
    return build_quadrature(256, 1024, default_boundary_exponent(w11))


@pytest.fixture(scope="session")
def q21(w21):
    return build_quadrature(256, 1024, default_boundary_exponent(w21))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {k:2d}: {line}")
