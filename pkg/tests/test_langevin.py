import math

import numpy as np
import pytest

from dcsl import langevin as L
from dcsl.coefficients import CollapseCoefficients, PairCoefficients
from dcsl.params import HBAR, K_B
from dcsl.spectra import MechanicalConfig, dns_cantilever, dns_relative

X = (1.0, 0.0, 0.0)
# unit oscillator, k_B T = 1
MECH = MechanicalConfig(1.0, 1.0, 0.1, 1.0 / K_B)
DT = 0.02
T200 = 200 * 2 * math.pi


def single(eta=0.0, gamma=0.0, kappa=0.0, m=1.0):
    return CollapseCoefficients(eta, gamma, kappa, X, m)


def pair(eta, sigma, om=0.0, gamma=0.0, kappa=0.0, m=1.0):
    return PairCoefficients(eta, sigma, om, gamma, kappa, X, m)


QUIET = MechanicalConfig(1.0, 1.0, 0.1, 0.0)


@pytest.mark.skipif("cython" not in L.available_backends(), reason="compiled kernel not built")
def test_backends_bit_identical():
    c = single(0.3 / HBAR**2, 0.01, 0.2 / HBAR)
    a = L.simulate(MECH, c, T200, DT, 7, backend="cython")
    b = L.simulate(MECH, c, T200, DT, 7, backend="python")
    assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)


def test_backend_selection():
    assert "python" in L.available_backends()
    assert L.BACKEND in L.available_backends()
    with pytest.raises(ValueError):
        L.simulate(MECH, single(), T200, DT, 0, backend="fortran")


def test_deterministic_decay_is_exact():
    tr = L.simulate(QUIET, single(), T200, DT, 0, x0=1e-3)
    g, w0 = QUIET.gamma_m, QUIET.omega0
    w1 = math.sqrt(w0 * w0 - g * g / 4)
    t = tr.t
    ref = 1e-3 * np.exp(-g * t / 2) * (np.cos(w1 * t) + g / (2 * w1) * np.sin(w1 * t))
    assert np.max(np.abs(tr.x - ref)) < 1e-12 * 1e-3
    assert len(tr) == t.size and tr[0].x == 1e-3 and tr[5].t == 5 * DT


def stationary_variance(mech, coeffs, dt, n_traj, seed=1):
    skip = int(50 / mech.gamma_m / dt)
    vx, vp = [], []
    for j in range(n_traj):
        tr = L.simulate(mech, coeffs, T200 + skip * dt, dt, seed, trajectory=j)
        vx.append(np.mean(tr.x[skip:] ** 2))
        vp.append(np.mean(tr.p[skip:] ** 2))
    vx, vp = np.array(vx), np.array(vp)
    return vx.mean(), vx.std(ddof=1) / math.sqrt(n_traj), vp.mean(), vp.std(ddof=1) / math.sqrt(n_traj)


def test_equipartition():
    vx, sx, vp, sp = stationary_variance(MECH, single(), DT, 200)
    assert vx == pytest.approx(1.0, rel=0.05) and abs(vx - 1.0) < 4 * sx
    assert vp == pytest.approx(1.0, rel=0.05) and abs(vp - 1.0) < 4 * sp


def test_collapse_heating_matches_temperature_shift():
    # eta hbar^2 = 0.05 on top of the bath; <x^2> = k_B (T + dT) / (m w0^2)
    c = single(0.05 / HBAR**2, 0.0, 0.0)
    vx, sx, _, _ = stationary_variance(MECH, c, DT, 200, seed=4)
    expected = 1.0 + 0.05 / (2 * MECH.gamma_m)
    assert abs(vx - expected) < 4 * sx


def test_step_halving_preserves_variance():
    a, sa, _, _ = stationary_variance(MECH, single(), DT, 60, seed=2)
    b, sb, _, _ = stationary_variance(MECH, single(), DT / 2, 60, seed=3)
    assert abs(a - b) < 4 * math.hypot(sa, sb)


def test_white_noise_calibration():
    W, dt, n = 3.0, 0.01, 256
    zs = []
    for seed in range(8):
        rng = np.random.default_rng(seed)
        est = L.estimate_psd(rng.standard_normal(400 * n) * math.sqrt(W / dt), dt, n)
        # bins 0 and 1 carry the constant-detrend leakage
        zs.append((est.values[2 : n // 2] - W) / est.stderr[2 : n // 2])
    z = np.concatenate(zs)
    assert est.n_segments == 799
    assert np.mean(np.abs(z) < 3) > 0.98
    assert abs(np.mean(z)) < 0.2
    assert 0.9 < np.std(z) < 1.1
    assert est.frequencies[1] == pytest.approx(2 * math.pi / (n * dt))


def test_sinusoid_parseval():
    dt, n = 0.01, 512
    f = 8 / (n * dt)
    t = np.arange(64 * n) * dt
    A = 2.5
    est = L.estimate_psd(A * np.sin(2 * math.pi * f * t), dt, n)
    df = 1 / (n * dt)
    power = 2 * np.sum(est.values[1:-1]) * df + (est.values[0] + est.values[-1]) * df
    assert power == pytest.approx(A * A / 2, rel=0.02)


def test_psd_needs_segments():
    with pytest.raises(ValueError):
        L.estimate_psd(np.zeros(100), 1.0, 32)
    with pytest.raises(ValueError):
        L.estimate_psd(np.zeros(1000), 1.0, 32, overlap=1.0)
    with pytest.raises(ValueError):
        L.combine([L.estimate_psd(np.ones(1000), 1.0, 32)])


def test_thermal_spectrum_validates():
    rep = L.validate_spectrum(MECH, single(), n_trajectories=16)
    assert rep.passed, rep.max_deviation
    # within 5% at resonance, averaged over the central bins
    near = np.abs(rep.omega - MECH.omega0) < MECH.gamma_m / 2
    ratio = np.mean(rep.estimate[near]) / np.mean(dns_cantilever(rep.omega[near], MECH, single()))
    assert ratio == pytest.approx(1.0, rel=0.05)


def test_validation_rejects_wrong_spectrum():
    wrong = lambda w: 1.3 * dns_cantilever(w, MECH, single())
    rep = L.validate_spectrum(MECH, single(), n_trajectories=16, analytic=wrong)
    assert not rep.passed


def test_pair_mode_spectrum():
    eta = 1.0 / HBAR**2
    c = pair(eta, 0.5 * eta, 1.0 / HBAR**3, 0.01, 0.01 * HBAR)
    rep = L.validate_spectrum(QUIET, c, n_trajectories=16)
    assert rep.passed, rep.max_deviation
    np.testing.assert_allclose(rep.analytic, dns_relative(rep.omega, QUIET, c, noise_factor=2.0))


def test_pair_coincident_bodies_are_deterministic():
    eta = 1.0 / HBAR**2
    tr = L.simulate(QUIET, pair(eta, eta), T200, DT, 3, x0=1e-3)
    ref = L.simulate(QUIET, single(), T200, DT, 3, x0=1e-3)
    assert np.all(np.isfinite(tr.x))
    assert np.max(np.abs(tr.x[-100:])) < 1e-3
    tr0 = L.simulate(QUIET, pair(eta, eta), T200, DT, 3)
    assert np.all(tr0.x == 0.0) and np.all(tr0.p == 0.0)
    assert ref.x[0] == tr.x[0]


def test_increment_covariance():
    noise = L.noise_channels(MECH, single(2.0 / HBAR**2, 0.0, 0.5 / HBAR))
    n, dt = 1_000_000, 0.01
    ex, ep, (dwx, dwp, dxi) = L.noise_increments(noise, dt, n, np.random.default_rng(9))
    Q = noise.covariance_rate * dt
    vx, vp = np.var(ex), np.var(ep)
    assert abs(vx - Q[0, 0]) < 3 * Q[0, 0] * math.sqrt(2 / n)
    assert abs(vp - Q[1, 1]) < 3 * Q[1, 1] * math.sqrt(2 / n)
    assert abs(np.mean(ex * ep)) < 3 * math.sqrt(Q[0, 0] * Q[1, 1] / n)
    assert abs(np.mean(dwx * dwp)) < 3 * np.std(dwx) * np.std(dwp) / math.sqrt(n)
    assert Q[0, 1] == 0.0


def test_seeded_streams():
    c = single(0.1 / HBAR**2)
    a = L.simulate(MECH, c, T200, DT, 5, trajectory=2)
    b = L.simulate(MECH, c, T200, DT, 5, trajectory=2)
    d = L.simulate(MECH, c, T200, DT, 5, trajectory=3)
    e = L.simulate(MECH, c, T200, DT, 6, trajectory=2)
    assert np.array_equal(a.x, b.x)
    assert not np.array_equal(a.x, d.x) and not np.array_equal(a.x, e.x)


def test_instability_names_step():
    c = pair(2.0 / HBAR**2, 1.0 / HBAR**2, 0.0, 0.0, 0.15 * HBAR)
    with pytest.raises(L.SimulationError) as info:
        L.simulate(QUIET, c, 2000.0, DT, 0, x0=1.0)
    assert info.value.step > 0
    assert f"step {info.value.step}" in str(info.value)


def test_step_preconditions():
    with pytest.raises(ValueError):
        L.simulate(MECH, single(), T200, 0.05, 0)
    with pytest.raises(ValueError):
        L.simulate(MECH, single(), 100.0, DT, 0)
    with pytest.raises(ValueError):
        L.simulate(MECH, single(), T200, -DT, 0)


def test_thread_count_independence():
    c = single(0.1 / HBAR**2)
    kw = dict(n_trajectories=6, duration=T200, dt=DT, seed=3, segment_length=2048)
    a = L.ensemble_psd(MECH, c, threads=1, **kw)
    b = L.ensemble_psd(MECH, c, threads=3, **kw)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.stderr, b.stderr)
    assert a.records()[1]["omega_rad_s"] == a.frequencies[1]
