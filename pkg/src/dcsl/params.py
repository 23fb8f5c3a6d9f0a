"""Physical constants, the dCSL parameter triple and closed-form derived scalars.

All quantities are SI.  An infinite noise temperature (``math.inf``) is the
pure CSL model; every derived scalar branches on it explicitly so that the
CSL limit is exact rather than reached through a very large float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PhysConstants",
    "CONSTANTS",
    "HBAR",
    "K_B",
    "M0",
    "CollapseParams",
    "DerivedScalars",
    "chi",
    "varkappa_m",
    "gamma_prime",
    "derived_scalars",
    "CHI_SCALE",
]


@dataclass(frozen=True)
class PhysConstants:
    hbar: float  # J s
    k_B: float  # J / K
    m0: float  # kg, reference nucleon mass

    def __post_init__(self) -> None:
        for name in ("hbar", "k_B", "m0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


# CODATA 2018; m0 is one unified atomic mass unit.
CONSTANTS = PhysConstants(hbar=1.054571817e-34, k_B=1.380649e-23, m0=1.66053906660e-27)
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
M0 = CONSTANTS.m0

# hbar^2 / (8 m0 k_B) in m^2 K.  chi = CHI_SCALE / (T_csl r_C^2).
# Evaluates to ~6.06e-20 m^2 K (an order-of-magnitude "1e-18" is sometimes quoted).
CHI_SCALE = HBAR**2 / (8.0 * M0 * K_B)


@dataclass(frozen=True)
class CollapseParams:
    """The (lambda, r_C, T_csl) triple.

    ``T_csl = math.inf`` selects the non-dissipative CSL model.
    """

    lam: float  # collapse rate, 1/s
    r_C: float  # correlation length, m
    T_csl: float = math.inf  # noise temperature, K

    def __post_init__(self) -> None:
        for name in ("lam", "r_C", "T_csl"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if not (self.r_C > 0 and math.isfinite(self.r_C)):
            raise ValueError(f"r_C must be finite and > 0, got {self.r_C!r}")
        if not self.T_csl > 0:
            raise ValueError(f"T_csl must be > 0 or inf, got {self.T_csl!r}")

    @property
    def is_csl(self) -> bool:
        return math.isinf(self.T_csl)

    def with_lambda(self, lam: float) -> "CollapseParams":
        return CollapseParams(lam, self.r_C, self.T_csl)


@dataclass(frozen=True)
class DerivedScalars:
    chi: float
    gamma_prime: float  # m^2; gamma_csl = eta * gamma_prime
    varkappa: float  # s/kg
    varkappa_m: float  # s


def chi(params: CollapseParams) -> float:
    """Dimensionless dissipation strength hbar^2 / (8 m0 k_B T_csl r_C^2)."""
    if params.is_csl:
        return 0.0
    return CHI_SCALE / (params.T_csl * params.r_C**2)


def varkappa_m(params: CollapseParams) -> float:
    """Geometry-independent product varkappa * m = hbar (1 + chi) / (4 k_B T_csl), in s.

    Zero in the CSL limit (no dissipation).
    """
    if params.is_csl:
        return 0.0
    return HBAR / (4.0 * K_B * params.T_csl) * (1.0 + chi(params))


def gamma_prime(params: CollapseParams, m: float) -> float:
    """Return 4 r_C^2 m0 chi (1 + chi) / m, so that gamma_csl = eta * gamma_prime."""
    if not m > 0:
        raise ValueError("mass must be positive")
    c = chi(params)
    return 4.0 * params.r_C**2 * M0 * c * (1.0 + c) / m


def derived_scalars(params: CollapseParams, m: float) -> DerivedScalars:
    km = varkappa_m(params)
    return DerivedScalars(
        chi=chi(params),
        gamma_prime=gamma_prime(params, m),
        varkappa=km / m,
        varkappa_m=km,
    )
