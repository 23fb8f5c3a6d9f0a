import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dcsl.coefficients import CollapseCoefficients, PairCoefficients, collapse_coefficients
from dcsl.geometry import Sphere
from dcsl.params import HBAR, K_B, CollapseParams
from dcsl.spectra import (
    CavityConfig,
    MechanicalConfig,
    UnstableDynamicsError,
    cavity_force_psd,
    csl_force_psd,
    dns_cantilever,
    dns_optomech,
    dns_relative,
    effective_damping,
    effective_frequency,
    spectral_temperature,
    system_temperature,
    temp_shift,
)
from dcsl.spectra import shifted_relative_dynamics

X = (1.0, 0.0, 0.0)


def coeffs(eta=0.0, gamma=0.0, kappa=0.0, m=1e-12):
    return CollapseCoefficients(eta, gamma, kappa, X, m)


def pair(eta=0.0, sigma=0.0, om=0.0, gamma=0.0, kappa=0.0, m=1.0):
    return PairCoefficients(eta, sigma, om, gamma, kappa, X, m)


MECH = MechanicalConfig.build(m=1e-12, f0=1e3, Q=1e4, T_env=4.2)
CAV = CavityConfig(omega_c=2 * math.pi * 3e14, omega_L=2 * math.pi * 3e14 - 2e7, kappa_c=1e7, g=1e17, P_in=1e-6)


def test_build_variants():
    a = MechanicalConfig.build(k_stiff=4.0, omega0=2.0, gamma_m=0.1, T_env=1.0)
    assert a.m == 1.0 and a.quality == 20.0 and a.k_stiff == 4.0
    b = MechanicalConfig.build(m=1.0, f0=1.0, Q=10.0, T_env=0.0)
    assert b.omega0 == 2 * math.pi and b.gamma_m == pytest.approx(2 * math.pi / 10)
    for bad in (dict(m=1.0, k_stiff=1.0, f0=1, Q=1), dict(m=1.0, Q=1), dict(m=1.0, f0=1, omega0=1, Q=1)):
        with pytest.raises(ValueError):
            MechanicalConfig.build(T_env=1.0, **bad)
    with pytest.raises(ValueError):
        MechanicalConfig(1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        MechanicalConfig(1.0, 1.0, 1.0, math.nan)


def test_cavity_force_is_sum_of_sideband_lorentzians():
    w = np.linspace(-5e7, 5e7, 101)
    k, d = CAV.kappa_c, CAV.detuning
    ref = k * (HBAR * CAV.g) ** 2 * abs(CAV.alpha) ** 2 * (1 / (k * k + (d - w) ** 2) + 1 / (k * k + (d + w) ** 2))
    np.testing.assert_allclose(cavity_force_psd(w, CAV), ref, rtol=1e-12)
    assert abs(CAV.alpha) ** 2 == pytest.approx(CAV.alpha_sq, rel=1e-12)


def test_radiation_pressure_damping_sign():
    w = MECH.omega0
    red = effective_damping(w, MECH, CAV, MECH.gamma_m)
    blue_cav = CavityConfig(CAV.omega_c, CAV.omega_c + CAV.detuning, CAV.kappa_c, CAV.g, CAV.P_in)
    blue = effective_damping(w, MECH, blue_cav, MECH.gamma_m)
    assert red > MECH.gamma_m > blue
    # no spring on resonance
    res = CavityConfig(CAV.omega_c, CAV.omega_c, CAV.kappa_c, CAV.g, CAV.P_in)
    assert effective_frequency(w, MECH, res) == pytest.approx(MECH.omega0**2, rel=1e-15)
    assert effective_damping(w, MECH, res, 3.0) == 3.0


def test_uncoupled_cavity_is_ignored():
    w = np.linspace(0.5, 1.5, 7) * MECH.omega0
    c = coeffs(1e20, 1e-3, 1e3)
    off = CavityConfig(CAV.omega_c, CAV.omega_L, CAV.kappa_c, 0.0, CAV.P_in)
    np.testing.assert_array_equal(dns_optomech(w, MECH, off, c), dns_optomech(w, MECH, None, c))
    np.testing.assert_array_equal(effective_frequency(w, MECH), np.full(7, MECH.omega0**2))


def test_high_temperature_agreement():
    w = np.linspace(0.8, 1.2, 41) * MECH.omega0
    c = coeffs(1e22, 0.02, 5e5)
    np.testing.assert_allclose(dns_optomech(w, MECH, None, c), dns_cantilever(w, MECH, c), rtol=1e-6)


def test_low_temperature_warns():
    cold = MechanicalConfig.build(m=1e-12, f0=1e9, Q=1e4, T_env=1e-3)
    with pytest.warns(RuntimeWarning):
        dns_cantilever(cold.omega0, cold, coeffs())


def test_lorentzian_peak_value():
    c = coeffs()
    peak = dns_cantilever(MECH.omega0, MECH, c)
    assert peak == pytest.approx(2 * K_B * MECH.T_env / (MECH.m * MECH.gamma_m * MECH.omega0**2), rel=1e-14)


@pytest.mark.parametrize(
    "mech",
    [MECH, MechanicalConfig.build(m=1e-3, f0=2.0, Q=3.0, T_env=300.0), MechanicalConfig.build(m=1.0, f0=1e4, Q=1e7, T_env=1e-3)],
)
def test_spectral_integral_recovers_bath_temperature(mech):
    assert spectral_temperature(mech, coeffs(m=mech.m)) == pytest.approx(mech.T_env, rel=1e-3)


def test_spectral_integral_matches_temperature_shift():
    g = Sphere(1e-6, 2000.0)
    for lam, T in ((1e-6, 1e-3), (1e-4, 1.0), (1e-8, math.inf)):
        c = collapse_coefficients(g, CollapseParams(lam, 1e-7, T), mass=MECH.m)
        dT = temp_shift(MECH, c)
        assert spectral_temperature(MECH, c) - MECH.T_env == pytest.approx(dT, rel=5e-3)
        assert system_temperature(MECH, c) == MECH.T_env + dT


def test_temperature_shift_limits():
    assert temp_shift(MECH, coeffs()) == 0.0
    # pure cooling when eta vanishes
    assert temp_shift(MECH, coeffs(0.0, MECH.gamma_m, 0.0)) == pytest.approx(-MECH.T_env / 2)
    c = coeffs(1e20)
    assert temp_shift(MECH, c) == pytest.approx(HBAR**2 * 1e20 / (2 * K_B * MECH.m * MECH.gamma_m), rel=1e-14)


def test_overdamped_raises():
    with pytest.raises(ValueError):
        spectral_temperature(MECH, coeffs(gamma=3 * MECH.omega0))
    with pytest.raises(ValueError):
        system_temperature(MECH, coeffs(gamma=3 * MECH.omega0))


def test_relative_spectrum():
    mech = MechanicalConfig.build(m=2.0, f0=1.0, Q=100.0, T_env=0.0)
    w = np.linspace(0.1, 10.0, 50)
    p = pair(1e40, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        flat = dns_cantilever(w, mech, coeffs(1e40, m=2.0))
    np.testing.assert_allclose(dns_relative(w, mech, p), flat, rtol=1e-13)
    np.testing.assert_allclose(dns_relative(w, mech, p, noise_factor=2.0), 2 * flat, rtol=1e-14)
    np.testing.assert_allclose(csl_force_psd(w, mech, p), HBAR**2 * 1e40, rtol=1e-15)
    same = pair(1e40, 1e40)
    assert np.all(dns_relative(w, mech, same) == 0.0)


def test_relative_dynamics_shift_and_instability():
    mech = MechanicalConfig.build(m=1.0, omega0=1.0, gamma_m=0.1, T_env=0.0)
    k, s = 1e-2, 5e33
    w2, g = shifted_relative_dynamics(mech, pair(2 * s, s, 0, 0.0, k))
    shift = 2 * k * s * HBAR
    assert g == pytest.approx(0.1 - shift) and w2 == pytest.approx(1 - 0.1 * shift)
    with pytest.raises(UnstableDynamicsError):
        dns_relative(1.0, mech, pair(1e36, 5e35, 0, 0.0, 1e-2))


@given(
    st.floats(0.0, 1e30),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1e3),
    st.floats(0.0, 1e8),
    st.floats(1e-3, 1e3),
)
@settings(max_examples=60, deadline=None)
def test_spectra_nonnegative(eta, frac, gamma, kappa, T):
    mech = MechanicalConfig.build(m=1e-9, f0=1e3, Q=1e3, T_env=T)
    w = np.geomspace(1e-2, 1e8, 30)
    c = coeffs(eta, gamma, kappa, 1e-9)
    assert np.all(dns_optomech(w, mech, None, c) >= 0)
    assert np.all(dns_optomech(w, mech, CAV, c) >= 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        assert np.all(dns_cantilever(w, mech, c) >= 0)
    try:
        s = dns_relative(w, mech, pair(eta, frac * eta, 0.0, gamma, kappa, 1e-9))
    except UnstableDynamicsError:
        return
    assert np.all(s >= 0) and np.all(np.isfinite(s))
