import math

import pytest
from hypothesis import given, strategies as st

from dcsl.params import (
    CHI_SCALE,
    HBAR,
    K_B,
    M0,
    CollapseParams,
    chi,
    derived_scalars,
    gamma_prime,
    varkappa_m,
)

r_c = st.floats(1e-10, 1e-3)
temps = st.floats(1e-12, 1e12)


def test_chi_scale_value():
    assert CHI_SCALE == pytest.approx(HBAR**2 / (8 * M0 * K_B), rel=1e-15)
    assert 6.0e-20 < CHI_SCALE < 6.1e-20


def test_csl_branch_is_exact():
    p = CollapseParams(1e-8, 1e-7)
    assert p.is_csl
    assert chi(p) == 0.0
    assert varkappa_m(p) == 0.0
    assert gamma_prime(p, 1.0) == 0.0


@given(r_c, temps)
def test_chi_closed_form(r, T):
    p = CollapseParams(1.0, r, T)
    assert chi(p) == pytest.approx(HBAR**2 / (8 * M0 * K_B * T * r * r), rel=1e-12)


@given(r_c, temps)
def test_varkappa_m_closed_form(r, T):
    p = CollapseParams(1.0, r, T)
    assert varkappa_m(p) == pytest.approx(HBAR * (1 + chi(p)) / (4 * K_B * T), rel=1e-12)


@given(r_c, temps, st.floats(1e-20, 1e4))
def test_derived_scalars_consistent(r, T, m):
    p = CollapseParams(1.0, r, T)
    d = derived_scalars(p, m)
    assert d.varkappa * m == pytest.approx(d.varkappa_m, rel=1e-12)
    c = d.chi
    assert d.gamma_prime == pytest.approx(4 * r * r * M0 * c * (1 + c) / m, rel=1e-12)


def test_chi_decreases_with_temperature_and_length():
    assert chi(CollapseParams(1, 1e-7, 1.0)) > chi(CollapseParams(1, 1e-7, 10.0))
    assert chi(CollapseParams(1, 1e-8, 1.0)) > chi(CollapseParams(1, 1e-7, 1.0))


@pytest.mark.parametrize(
    "args",
    [(-1.0, 1e-7, 1.0), (math.nan, 1e-7, 1.0), (1.0, 0.0, 1.0), (1.0, math.inf, 1.0), (1.0, 1e-7, 0.0), (1.0, 1e-7, -1.0)],
)
def test_invalid_params(args):
    with pytest.raises(ValueError):
        CollapseParams(*args)


def test_with_lambda_and_float_coercion():
    import numpy as np

    p = CollapseParams(np.float64(1.0), np.float64(1e-7), 2.0).with_lambda(3.0)
    assert p.lam == 3.0 and type(p.r_C) is float
