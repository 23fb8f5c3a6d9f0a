"""dCSL collapse-noise toolkit: coefficients, spectra, Langevin simulation and parameter bounds."""

from .params import CONSTANTS, HBAR, K_B, M0, CollapseParams, chi, derived_scalars, gamma_prime, varkappa_m
from .geometry import Cuboid, Cylinder, GeometryPair, Point, RigidComposite, Sphere, form_factor
from .coefficients import (
    CollapseCoefficients,
    PairCoefficients,
    collapse_coefficients,
    eta,
    gamma_csl,
    mc_coefficient,
    mc_integral,
    omega_coupling,
    pair_coefficients,
    sigma,
)
from .spectra import (
    CavityConfig,
    MechanicalConfig,
    csl_force_psd,
    dns_cantilever,
    dns_optomech,
    dns_relative,
    spectral_temperature,
    system_temperature,
    temp_shift,
)
from .langevin import combine, estimate_psd, simulate, validate_spectrum
from .experiments import (
    ExperimentConfig,
    exclusion_curve,
    lambda_bound,
    load_experiment,
    predicted_observable,
    validity_check,
)
from .emit import emit_table

__version__ = "0.1.0"
