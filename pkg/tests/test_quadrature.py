import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dcsl.quadrature import QuadratureError, integrate, oscillation_breakpoints, pairwise_sum


@given(st.integers(0, 20))
def test_polynomials_exact(k):
    val, err = integrate(lambda x: x**k, [0.0, 1.0], rtol=1e-13)
    assert val == pytest.approx(1.0 / (k + 1), rel=1e-13)


def test_gaussian_and_error_estimate():
    val, err = integrate(lambda x: np.exp(-x * x), np.linspace(-12, 12, 9), rtol=1e-12)
    assert val == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert err < 1e-11


def test_oscillatory_with_breakpoints():
    edges = oscillation_breakpoints(0.0, 200.0, 2 * math.pi / 50.0)
    val, _ = integrate(lambda x: np.cos(50 * x) * np.exp(-x / 50), edges, rtol=1e-12, l1_rtol=1e-14)
    a = 1 / 50
    expect = (a - math.exp(-200 * a) * (a * math.cos(1e4) - 50 * math.sin(1e4))) / (a * a + 2500)
    assert val == pytest.approx(expect, rel=1e-9)


def test_singular_endpoint():
    val, _ = integrate(lambda x: 1 / np.sqrt(x), [0.0, 1.0], rtol=1e-9, max_panels=100_000)
    assert val == pytest.approx(2.0, rel=1e-8)


def test_budget_exhaustion_reports_estimate():
    with pytest.raises(QuadratureError) as exc:
        integrate(lambda x: np.sin(1 / x), [1e-6, 1.0], rtol=1e-14, max_panels=50)
    assert math.isfinite(exc.value.estimate)


def test_l1_tolerance_for_cancelling_integrals():
    val, _ = integrate(lambda x: np.sin(x), [-math.pi, math.pi], rtol=1e-14, l1_rtol=1e-12)
    assert abs(val) < 1e-12


def test_bad_breakpoints():
    with pytest.raises(ValueError):
        integrate(lambda x: x, [1.0, 0.0])


def test_pairwise_sum_order_independent_of_chunking():
    v = np.random.default_rng(0).standard_normal(1001)
    assert pairwise_sum(v) == pytest.approx(float(np.sum(v)), abs=1e-12)
    assert pairwise_sum([]) == 0.0
