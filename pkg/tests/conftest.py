import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tsnoether.timescale import make_explicit, make_qscale, make_uniform

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def scales(draw, max_points=60):
    """Uniform, q-type or mixed uniform/geometric scales."""
    kind = draw(st.sampled_from(["uniform", "q", "mixed"]))
    if kind == "uniform":
        n = draw(st.integers(1, max_points - 1))
        a = draw(st.floats(-5, 5, allow_nan=False))
        h = draw(st.sampled_from([0.5, 0.25, 0.125, 0.1, 0.01, 1.0]))
        return make_uniform(a, a + n * h, h)
    if kind == "q":
        q = draw(st.floats(1.05, 3.0))
        lo = draw(st.integers(-4, 2))
        hi = draw(st.integers(lo + 1, lo + min(max_points - 1, 8)))
        return make_qscale(q, lo, hi)
    h = draw(st.sampled_from([0.25, 0.1, 0.05]))
    k = draw(st.integers(1, 10))
    q = draw(st.floats(1.2, 2.5))
    j = draw(st.integers(1, 6))
    left = [i * h for i in range(k + 1)]
    right = [left[-1] * q**i for i in range(1, j + 1)]
    return make_explicit(left + right)


def poly_values(coeffs, t):
    return np.polynomial.polynomial.polyval(t, coeffs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
