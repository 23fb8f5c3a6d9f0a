"""Stationary density noise spectra and spectral temperatures.

Spectra are two-sided and symmetrised, ``S(w) = int dtau e^{-i w tau} C(tau)``,
so that the variance is ``int S dw / (2 pi)``.  Every spectrum function
accepts a scalar or an array of angular frequencies (rad/s).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coefficients import CollapseCoefficients, PairCoefficients
from .params import HBAR, K_B
from .quadrature import QuadratureError, integrate

__all__ = [
    "MechanicalConfig",
    "CavityConfig",
    "SpectrumPoint",
    "UnstableDynamicsError",
    "effective_frequency",
    "effective_damping",
    "thermal_force_psd",
    "cavity_force_psd",
    "dns_optomech",
    "dns_cantilever",
    "dns_relative",
    "csl_force_psd",
    "temp_shift",
    "system_temperature",
    "spectral_temperature",
    "PEAK_WINDOW",
]

# Half-width of the resolved resonance panel in the spectral-temperature integral, in units of gamma.
PEAK_WINDOW = 40.0


class UnstableDynamicsError(ArithmeticError):
    """The collapse-shifted frequency or damping is not positive."""


@dataclass(frozen=True)
class MechanicalConfig:
    m: float  # kg
    omega0: float  # rad/s
    gamma_m: float  # 1/s
    T_env: float  # K

    def __post_init__(self) -> None:
        for name in ("m", "omega0", "gamma_m"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        if not (self.T_env >= 0 and math.isfinite(self.T_env)):
            raise ValueError(f"T_env must be finite and >= 0, got {self.T_env!r}")

    @classmethod
    def build(
        cls,
        *,
        T_env: float,
        m: float | None = None,
        k_stiff: float | None = None,
        omega0: float | None = None,
        f0: float | None = None,
        gamma_m: float | None = None,
        Q: float | None = None,
    ) -> "MechanicalConfig":
        """Assemble from any consistent subset: (m | k_stiff), (omega0 | f0), (gamma_m | Q)."""
        if (omega0 is None) == (f0 is None):
            raise ValueError("give exactly one of omega0, f0")
        w0 = float(omega0) if omega0 is not None else 2.0 * math.pi * float(f0)
        if (m is None) == (k_stiff is None):
            raise ValueError("give exactly one of m, k_stiff")
        mass = float(m) if m is not None else float(k_stiff) / w0**2
        if (gamma_m is None) == (Q is None):
            raise ValueError("give exactly one of gamma_m, Q")
        gam = float(gamma_m) if gamma_m is not None else w0 / float(Q)
        return cls(mass, w0, gam, float(T_env))

    @property
    def k_stiff(self) -> float:
        return self.m * self.omega0**2

    @property
    def quality(self) -> float:
        return self.omega0 / self.gamma_m


@dataclass(frozen=True)
class CavityConfig:
    omega_c: float  # rad/s
    omega_L: float  # rad/s
    kappa_c: float  # 1/s
    g: float  # 1/(m s)
    P_in: float  # W

    def __post_init__(self) -> None:
        if not self.kappa_c > 0:
            raise ValueError("kappa_c must be positive")
        if not self.omega_c > 0:
            raise ValueError("omega_c must be positive")
        if self.P_in < 0:
            raise ValueError("P_in must be >= 0")

    @property
    def detuning(self) -> float:
        # static shift -g<x> neglected: Delta = Delta0
        return self.omega_c - self.omega_L

    @property
    def alpha_in(self) -> float:
        return math.sqrt(self.P_in / (HBAR * self.omega_c))

    @property
    def alpha(self) -> complex:
        return math.sqrt(2.0 * self.kappa_c) * self.alpha_in / complex(self.kappa_c, -self.detuning)

    @property
    def alpha_sq(self) -> float:
        k, d = self.kappa_c, self.detuning
        return 2.0 * k * self.alpha_in**2 / (k * k + d * d)


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    S_xx: float


def _lorentz_pair(omega, cav: CavityConfig):
    k, d = cav.kappa_c, cav.detuning
    return ((d + omega) ** 2 + k * k) * ((d - omega) ** 2 + k * k)


def effective_frequency(omega, mech: MechanicalConfig, cavity: CavityConfig | None = None):
    """Squared effective resonance frequency including the optical spring."""
    omega = np.asarray(omega, dtype=float)
    if cavity is None or cavity.g == 0.0:
        return np.full_like(omega, mech.omega0**2)
    k, d = cavity.kappa_c, cavity.detuning
    spring = 2.0 * cavity.alpha_sq * HBAR * cavity.g**2 * d * (d * d - omega**2 + k * k)
    return mech.omega0**2 - spring / (mech.m * _lorentz_pair(omega, cavity))


def effective_damping(omega, mech: MechanicalConfig, cavity: CavityConfig | None, gamma_total: float):
    """Effective damping rate: ``gamma_total`` plus the radiation-pressure term."""
    omega = np.asarray(omega, dtype=float)
    if cavity is None or cavity.g == 0.0:
        return np.full_like(omega, gamma_total)
    k, d = cavity.kappa_c, cavity.detuning
    extra = 4.0 * cavity.alpha_sq * HBAR * cavity.g**2 * k * d
    return gamma_total + extra / (mech.m * _lorentz_pair(omega, cavity))


def thermal_force_psd(omega, mech: MechanicalConfig):
    """hbar gamma_m m w coth(hbar w / 2 k_B T), the symmetrised bath force spectrum."""
    omega = np.asarray(omega, dtype=float)
    if mech.T_env == 0.0:
        return HBAR * mech.gamma_m * mech.m * np.abs(omega)
    x = HBAR * omega / (2.0 * K_B * mech.T_env)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 1.0, x)
    x2 = x * x
    xcothx = np.where(small, 1.0 + x2 / 3.0 - x2 * x2 / 45.0, xs / np.tanh(xs))
    return 2.0 * mech.m * mech.gamma_m * K_B * mech.T_env * xcothx


def cavity_force_psd(omega, cavity: CavityConfig):
    """Symmetrised radiation-pressure force noise of the driven cavity."""
    omega = np.asarray(omega, dtype=float)
    k, d = cavity.kappa_c, cavity.detuning
    num = 2.0 * HBAR**2 * cavity.g**2 * k * cavity.alpha_sq * (d * d + k * k + omega**2)
    return num / _lorentz_pair(omega, cavity)


def _csl_force(omega, eta_val: float, km: float, gamma: float):
    return HBAR**2 * eta_val * (1.0 + km * km * (gamma * gamma + np.asarray(omega, dtype=float) ** 2))


def dns_optomech(omega, mech: MechanicalConfig, cavity: CavityConfig | None, coeffs: CollapseCoefficients):
    """Full density noise spectrum of a cavity-coupled resonator (m^2 s)."""
    omega = np.asarray(omega, dtype=float)
    gamma = mech.gamma_m + coeffs.gamma_csl
    km = coeffs.varkappa * mech.m
    w2 = effective_frequency(omega, mech, cavity)
    g_eff = effective_damping(omega, mech, cavity, gamma)
    d2 = mech.m**2 * ((w2 - omega**2) ** 2 + (g_eff * omega) ** 2)
    force = thermal_force_psd(omega, mech) + _csl_force(omega, coeffs.eta, km, gamma)
    if cavity is not None and cavity.g != 0.0:
        force = force + cavity_force_psd(omega, cavity)
    return force / d2


def _check_high_temperature(mech: MechanicalConfig) -> None:
    if HBAR * mech.omega0 > 0.1 * K_B * mech.T_env:
        warnings.warn(
            f"high-temperature bath approximation is poor: hbar*omega0/(k_B T) = "
            f"{HBAR * mech.omega0 / (K_B * mech.T_env) if mech.T_env else math.inf:.3g}",
            RuntimeWarning,
            stacklevel=3,
        )


def dns_cantilever(omega, mech: MechanicalConfig, coeffs: CollapseCoefficients):
    """Density noise spectrum of a free resonator with a white (high-temperature) bath."""
    _check_high_temperature(mech)
    omega = np.asarray(omega, dtype=float)
    gamma = mech.gamma_m + coeffs.gamma_csl
    km = coeffs.varkappa * mech.m
    num = 2.0 * mech.m * mech.gamma_m * K_B * mech.T_env + _csl_force(omega, coeffs.eta, km, gamma)
    # factored detuning avoids cancellation in omega0^2 - omega^2 at high Q
    detune = (mech.omega0 - omega) * (mech.omega0 + omega)
    den = mech.m**2 * (detune**2 + (gamma * omega) ** 2)
    return num / den


def shifted_relative_dynamics(mech: MechanicalConfig, pc: PairCoefficients) -> tuple[float, float]:
    """(omega~0^2, gamma~) of the relative coordinate; raises if either is not positive."""
    gamma = mech.gamma_m + pc.gamma_csl
    shift = 2.0 * pc.varkappa * pc.sigma * HBAR
    w2 = mech.omega0**2 - gamma * shift
    g = gamma - shift
    if not (w2 > 0 and g > 0):
        raise UnstableDynamicsError(f"relative dynamics not damped: omega~0^2={w2!r}, gamma~={g!r}")
    return w2, g


def csl_force_psd(omega, mech: MechanicalConfig, pc: PairCoefficients):
    """Collapse force noise on the relative coordinate, hbar^2 (eta-sigma)(1 + m^2 k^2 (g^2 + w^2)) (N^2 s)."""
    gamma = mech.gamma_m + pc.gamma_csl
    km = pc.varkappa * mech.m
    return _csl_force(omega, pc.eta - pc.sigma, km, gamma)


def dns_relative(omega, mech: MechanicalConfig, pc: PairCoefficients, noise_factor: float = 1.0):
    """Collapse-only spectrum of the relative coordinate of a body pair (m^2 s).

    ``noise_factor`` multiplies the noise intensity ``eta - sigma``; the
    default reproduces the standard closed form, and 2 corresponds to
    increments of variance ``2 (eta - sigma) dt`` as used by the simulator.
    """
    omega = np.asarray(omega, dtype=float)
    w2, g = shifted_relative_dynamics(mech, pc)
    den = mech.m**2 * ((w2 - omega**2) ** 2 + (g * omega) ** 2)
    return noise_factor * csl_force_psd(omega, mech, pc) / den


def temp_shift(mech: MechanicalConfig, coeffs: CollapseCoefficients) -> float:
    """Collapse-induced shift of the spectral temperature (K): heating minus cooling."""
    gamma = mech.gamma_m + coeffs.gamma_csl
    km = coeffs.varkappa * mech.m
    heat = HBAR**2 * coeffs.eta * (1.0 + km * km * (gamma**2 + mech.omega0**2)) / (2.0 * K_B * mech.m * gamma)
    return heat - coeffs.gamma_csl / gamma * mech.T_env


def _require_underdamped(mech: MechanicalConfig, coeffs: CollapseCoefficients) -> float:
    gamma = mech.gamma_m + coeffs.gamma_csl
    if not gamma < 2.0 * mech.omega0:
        raise ValueError(f"resonator is not underdamped: gamma={gamma!r} >= 2 omega0={2 * mech.omega0!r}")
    return gamma


def system_temperature(mech: MechanicalConfig, coeffs: CollapseCoefficients) -> float:
    _require_underdamped(mech, coeffs)
    return mech.T_env + temp_shift(mech, coeffs)


def spectral_temperature(mech: MechanicalConfig, coeffs: CollapseCoefficients, rtol: float = 1e-10) -> float:
    """(m omega0^2 / k_B) int S dw / (2 pi), by quadrature of :func:`dns_cantilever`.

    The resonance is resolved on a panel of +-PEAK_WINDOW gamma; the remaining
    half-axis is covered in full, with the tail beyond the last breakpoint
    mapped onto a finite interval through ``w = 1/u``.
    """
    gamma = _require_underdamped(mech, coeffs)
    w0 = mech.omega0
    lo = max(0.0, w0 - PEAK_WINDOW * gamma)
    hi = w0 + PEAK_WINDOW * gamma
    edges = [0.0] if lo == 0.0 else [0.0, lo]
    # geometric refinement towards the peak keeps panels near the Lorentzian width
    core = w0 + gamma * np.concatenate([-np.geomspace(PEAK_WINDOW, 0.25, 16), [0.0], np.geomspace(0.25, PEAK_WINDOW, 16)])
    edges = np.unique(np.concatenate([edges, core[core > 0.0], [2.0 * hi]]))
    top = edges[-1]

    def f(w):
        return dns_cantilever(w, mech, coeffs)

    def tail(u):
        return dns_cantilever(1.0 / u, mech, coeffs) / (u * u)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            body, _ = integrate(f, edges, rtol=rtol)
            far, _ = integrate(tail, [0.0, 1.0 / top], rtol=rtol)
        except QuadratureError as exc:
            raise QuadratureError(f"spectral temperature integral failed: {exc}", exc.estimate, exc.error) from exc
    # even spectrum: the negative half-axis doubles the integral
    return mech.m * w0**2 / K_B * (body + far) / math.pi
