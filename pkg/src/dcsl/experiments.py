"""Experiment catalog, validity of the small-displacement expansion, and lambda bounds.

Each experiment maps ``lambda`` to one predicted observable in the units of
its bound datum: the magnitude of the collapse-induced temperature shift for
a thermally monitored cantilever, or a one-sided force-noise amplitude for a
pair of test masses.  ``lambda_bound`` finds the smallest ``lambda`` at which
the prediction reaches the datum.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Union

import numpy as np

from .coefficients import (
    PairCoefficients,
    collapse_coefficients,
    pair_coefficients,
)
from .geometry import Cuboid, Cylinder, GeometryPair, MassGeometry, Point, RigidComposite, Sphere, nucleon_count
from .params import HBAR, K_B, CollapseParams, chi
from .spectra import MechanicalConfig, csl_force_psd, temp_shift

__all__ = [
    "THERMAL_CANTILEVER",
    "FORCE_NOISE_PAIR",
    "BoundDatum",
    "ExperimentConfig",
    "ValidityReport",
    "BoundResult",
    "ExclusionPoint",
    "ExclusionCurve",
    "LAMBDA_RANGE",
    "SCAN_PER_DECADE",
    "STATUSES",
    "geometry_from_dict",
    "experiment_from_dict",
    "load_experiment",
    "catalog_names",
    "load_reference_points",
    "unit_coefficients",
    "validity_check",
    "predicted_observable",
    "lambda_bound",
    "exclusion_curve",
    "force_amplitude",
    "scale_coefficients",
]

THERMAL_CANTILEVER = "thermal_cantilever"
FORCE_NOISE_PAIR = "force_noise_pair"
LAMBDA_RANGE = (1e-20, 1e4)
SCAN_PER_DECADE = 60
# below LAMBDA_RANGE[0] the scan continues one decade at a time so a root is always bracketed
_LAMBDA_FLOOR = 1e-300
# relative width of the final log-lambda bracket
_BISECT_RTOL = 1e-7
STATUSES = ("bracketed-root", "no-exclusion-below-cap", "invalid-region")


# -- configuration ---------------------------------------------------------------------


@dataclass(frozen=True)
class BoundDatum:
    delta_T_max: float | None = None  # K
    S_F: float | None = None  # N/sqrt(Hz), one-sided amplitude
    f_meas: float | None = None  # Hz
    placeholder: bool = False

    def __post_init__(self) -> None:
        given = [v for v in (self.delta_T_max, self.S_F) if v is not None]
        if len(given) != 1:
            raise ValueError("datum needs exactly one of delta_T_max_K, S_F_N_sqrtHz")
        if not (given[0] > 0 and math.isfinite(given[0])):
            raise ValueError(f"datum must be finite and positive, got {given[0]!r}")
        if self.S_F is not None and not (self.f_meas is not None and self.f_meas >= 0):
            raise ValueError("a force-noise datum needs f_meas_Hz >= 0")

    @property
    def value(self) -> float:
        return self.delta_T_max if self.delta_T_max is not None else self.S_F

    @property
    def omega_meas(self) -> float:
        return 2.0 * math.pi * (self.f_meas or 0.0)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    geometry: Union[MassGeometry, GeometryPair]
    mech: MechanicalConfig
    datum: BoundDatum
    axis: tuple[float, float, float] | None = None
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.kind == THERMAL_CANTILEVER:
            if isinstance(self.geometry, GeometryPair):
                raise ValueError("a thermal cantilever takes a single body")
            if self.datum.delta_T_max is None:
                raise ValueError("a thermal cantilever needs delta_T_max_K")
        elif self.kind == FORCE_NOISE_PAIR:
            if not isinstance(self.geometry, GeometryPair):
                raise ValueError("a force-noise experiment takes a body pair")
            if self.datum.S_F is None:
                raise ValueError("a force-noise experiment needs S_F_N_sqrtHz")
        else:
            raise ValueError(f"unknown experiment kind {self.kind!r}")

    @property
    def is_pair(self) -> bool:
        return self.kind == FORCE_NOISE_PAIR

    @property
    def body(self) -> MassGeometry:
        return self.geometry.base if self.is_pair else self.geometry

    @property
    def nucleons(self) -> float:
        """N entering the momentum condition, per body for a pair."""
        return nucleon_count(self.body)

    def with_datum(self, value: float) -> "ExperimentConfig":
        if self.is_pair:
            return replace(self, datum=replace(self.datum, S_F=float(value)))
        return replace(self, datum=replace(self.datum, delta_T_max=float(value)))


def _num(d: dict, key: str) -> float:
    try:
        v = float(d[key])
    except KeyError:
        raise ValueError(f"missing field {key!r}") from None
    except (TypeError, ValueError):
        raise ValueError(f"field {key!r} must be a number, got {d[key]!r}") from None
    return v


def geometry_from_dict(d: dict) -> Union[MassGeometry, GeometryPair]:
    """Build a geometry from its JSON description (SI units, ``_m``/``_kg`` suffixes)."""
    kind = str(d.get("type", "")).lower()
    if kind == "point":
        return Point(_num(d, "mass_kg"))
    if kind == "sphere":
        if "mass_kg" in d:
            return Sphere.from_mass(_num(d, "radius_m"), _num(d, "mass_kg"))
        return Sphere(_num(d, "radius_m"), _num(d, "density_kg_m3"))
    if kind == "cylinder":
        axis = tuple(d.get("axis", (0.0, 0.0, 1.0)))
        if "mass_kg" in d:
            return Cylinder.from_mass(_num(d, "radius_m"), _num(d, "length_m"), _num(d, "mass_kg"), axis)
        return Cylinder(_num(d, "radius_m"), _num(d, "length_m"), _num(d, "density_kg_m3"), axis)
    if kind in ("cuboid", "box"):
        sides = d.get("sides_m")
        if sides is None or len(sides) != 3:
            raise ValueError("cuboid needs sides_m = [a, b, c]")
        a, b, c = (float(s) for s in sides)
        if "mass_kg" in d:
            return Cuboid.from_mass(a, b, c, _num(d, "mass_kg"))
        return Cuboid(a, b, c, _num(d, "density_kg_m3"))
    if kind == "composite":
        parts = [(geometry_from_dict(p["body"]), tuple(p.get("offset_m", (0.0, 0.0, 0.0)))) for p in d.get("parts", [])]
        return RigidComposite(tuple(parts))
    if kind == "pair":
        base = geometry_from_dict(d["base"])
        if isinstance(base, GeometryPair):
            raise ValueError("pair base must be a single body")
        return GeometryPair(base, tuple(d["separation_m"]))
    raise ValueError(f"unknown geometry type {d.get('type')!r}")


def _mech_from_dict(d: dict) -> MechanicalConfig:
    return MechanicalConfig.build(
        T_env=_num(d, "T_env_K"),
        m=d.get("m_kg"),
        k_stiff=d.get("k_stiff_N_m"),
        omega0=d.get("omega0_rad_s"),
        f0=d.get("f0_Hz"),
        gamma_m=d.get("gamma_m_1_s"),
        Q=d.get("Q"),
    )


def _sphere_only(g: MassGeometry) -> MassGeometry:
    if isinstance(g, RigidComposite):
        spheres = [body for body, _ in g.parts if isinstance(body, Sphere)]
        if len(spheres) != 1:
            raise ValueError("sphere_only needs exactly one sphere in the composite")
        return spheres[0]
    if isinstance(g, Sphere):
        return g
    raise ValueError("sphere_only needs a sphere or a composite containing one")


def experiment_from_dict(d: dict) -> ExperimentConfig:
    for key in ("name", "kind", "geometry", "mech", "datum"):
        if key not in d:
            raise ValueError(f"missing field {key!r}")
    geom = geometry_from_dict(d["geometry"])
    model = str(d.get("mass_model", "composite"))
    if model == "sphere_only":
        geom = _sphere_only(geom)
    elif model != "composite":
        raise ValueError(f"mass_model must be 'composite' or 'sphere_only', got {model!r}")
    dd = d["datum"]
    datum = BoundDatum(
        delta_T_max=dd.get("delta_T_max_K"),
        S_F=dd.get("S_F_N_sqrtHz"),
        f_meas=dd.get("f_meas_Hz"),
        placeholder=bool(dd.get("placeholder", False)),
    )
    axis = d.get("axis")
    return ExperimentConfig(
        name=str(d["name"]),
        kind=str(d["kind"]),
        geometry=geom,
        mech=_mech_from_dict(d["mech"]),
        datum=datum,
        axis=None if axis is None else tuple(float(a) for a in axis),
        notes={"mass_model": model},
    )


def catalog_names() -> list[str]:
    root = resources.files("dcsl") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_experiment(path_or_name: str | os.PathLike, **overrides) -> ExperimentConfig:
    """Load a JSON experiment file, or a shipped catalog entry by name.

    ``overrides`` replace top-level JSON fields (e.g. ``mass_model``).
    """
    p = os.fspath(path_or_name)
    if os.path.exists(p):
        with open(p, encoding="utf-8") as fh:
            d = json.load(fh)
    else:
        name = os.path.basename(p)
        name = name[:-5] if name.endswith(".json") else name
        res = resources.files("dcsl") / "catalog" / f"{name}.json"
        if not res.is_file():
            raise FileNotFoundError(f"no experiment file or catalog entry {p!r}")
        d = json.loads(res.read_text(encoding="utf-8"))
    d.update(overrides)
    return experiment_from_dict(d)


def load_reference_points(path: str | os.PathLike | None = None) -> list[dict]:
    """Static overlay points (label, r_C_m, lambda_1_s); never computed."""
    if path is None:
        text = (resources.files("dcsl") / "catalog" / "reference_points.csv").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    rows = csv.DictReader(text.splitlines())
    return [{"label": r["label"], "r_C_m": float(r["r_C_m"]), "lambda_1_s": float(r["lambda_1_s"])} for r in rows]


# -- validity --------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidityReport:
    delta_x: float  # m
    delta_v: float  # m/s
    position_margin: float  # r_C (1 + chi) / delta_x
    momentum_margin: float  # (N hbar / (r_C chi)) / (m delta_v); inf for chi = 0
    satisfied: bool  # both margins > 1
    well_satisfied: bool  # both margins > 10


def validity_check(exp: ExperimentConfig, params: CollapseParams) -> ValidityReport:
    mech = exp.mech
    dx = math.sqrt(K_B * mech.T_env / (mech.m * mech.omega0**2))
    dv = math.sqrt(K_B * mech.T_env / mech.m)
    c = chi(params)
    pos_bound = params.r_C * (1.0 + c)
    pos = pos_bound / dx if dx > 0 else math.inf
    if c == 0.0:
        mom = math.inf
    else:
        mom_bound = exp.nucleons * HBAR / (params.r_C * c)
        p = mech.m * dv
        mom = mom_bound / p if p > 0 else math.inf
    return ValidityReport(dx, dv, pos, mom, bool(pos > 1.0 and mom > 1.0), bool(pos > 10.0 and mom > 10.0))


# -- predictions -----------------------------------------------------------------------


def unit_coefficients(exp: ExperimentConfig, r_C: float, T_csl: float):
    """Coefficients at lambda = 1; every coefficient is linear in lambda.

    The dynamical mass ``mech.m`` is used for varkappa and gamma_csl, so that
    varkappa * m takes its geometry-independent value.
    """
    params = CollapseParams(1.0, r_C, T_csl)
    if exp.is_pair:
        return pair_coefficients(exp.geometry, params, exp.axis, mass=exp.mech.m)
    return collapse_coefficients(exp.geometry, params, exp.axis or (1.0, 0.0, 0.0), mass=exp.mech.m)


def scale_coefficients(unit, lam: float):
    """Coefficients at ``lam`` from their lambda = 1 values."""
    if isinstance(unit, PairCoefficients):
        return replace(
            unit, eta=lam * unit.eta, sigma=lam * unit.sigma, omega_coupling=lam * unit.omega_coupling, gamma_csl=lam * unit.gamma_csl
        )
    return replace(unit, eta=lam * unit.eta, gamma_csl=lam * unit.gamma_csl)


def force_amplitude(two_sided_psd):
    """One-sided amplitude spectral density (N/sqrt(Hz)) from a two-sided PSD (N^2 s)."""
    return np.sqrt(2.0 * np.asarray(two_sided_psd, dtype=float))


def _observable(exp: ExperimentConfig, coeffs) -> float:
    if exp.is_pair:
        return float(force_amplitude(csl_force_psd(exp.datum.omega_meas, exp.mech, coeffs)))
    return abs(temp_shift(exp.mech, coeffs))


def predicted_observable(exp: ExperimentConfig, params: CollapseParams) -> float:
    """|Delta T| (K) for a cantilever, one-sided force amplitude (N/sqrt(Hz)) for a pair."""
    unit = unit_coefficients(exp, params.r_C, params.T_csl)
    return _observable(exp, scale_coefficients(unit, params.lam))


@dataclass(frozen=True)
class BoundResult:
    lambda_max: float  # 1/s; the cap when no exclusion was found
    status: str
    validity: ValidityReport
    ratio: float  # predicted / datum at lambda_max
    monotone: bool  # coarse scan found a single upward crossing


def _bisect(f, lo: float, hi: float) -> float:
    """Smallest-crossing refinement on log lambda; f(lo) < 0 <= f(hi)."""
    a, b = math.log(lo), math.log(hi)
    while b - a > _BISECT_RTOL:
        m = 0.5 * (a + b)
        if f(math.exp(m)) >= 0.0:
            b = m
        else:
            a = m
    return math.exp(b)


def lambda_bound(exp: ExperimentConfig, r_C: float, T_csl: float) -> BoundResult:
    params = CollapseParams(0.0, r_C, T_csl)
    valid = validity_check(exp, params)
    unit = unit_coefficients(exp, r_C, T_csl)
    datum = exp.datum.value

    def excess(lam: float) -> float:
        v = _observable(exp, scale_coefficients(unit, lam))
        if not math.isfinite(v):
            raise ArithmeticError(f"predicted observable is not finite at lambda={lam!r}")
        return v - datum

    lo, hi = LAMBDA_RANGE
    n = int(round(math.log10(hi / lo) * SCAN_PER_DECADE))
    grid = np.geomspace(lo, hi, n + 1)
    vals = np.array([excess(float(x)) for x in grid])
    above = vals >= 0.0
    crossings = int(np.count_nonzero(above[1:] & ~above[:-1]))
    monotone = crossings <= 1 and not np.any(~above[1:] & above[:-1])
    if not np.any(above):
        return BoundResult(hi, "no-exclusion-below-cap", valid, (vals[-1] + datum) / datum, monotone)
    k = int(np.argmax(above))
    if k == 0:
        # already excluded at the bottom of the range: walk down until bracketed
        b = float(grid[0])
        a = b / 10.0
        while excess(a) >= 0.0:
            b, a = a, a / 10.0
            if a < _LAMBDA_FLOOR:
                raise ArithmeticError("no lambda small enough to fall below the datum")
        a_lam, b_lam = a, b
    else:
        a_lam, b_lam = float(grid[k - 1]), float(grid[k])
    lam = _bisect(excess, a_lam, b_lam)
    ratio = (excess(lam) + datum) / datum
    status = "bracketed-root" if valid.satisfied else "invalid-region"
    return BoundResult(lam, status, valid, ratio, monotone)


# -- exclusion curves ------------------------------------------------------------------


@dataclass(frozen=True)
class ExclusionPoint:
    r_C: float
    lambda_max: float
    status: str
    validity: bool

    def record(self) -> dict:
        return {"r_C_m": self.r_C, "lambda_max_1_s": self.lambda_max, "status": self.status, "validity": self.validity}


@dataclass(frozen=True)
class ExclusionCurve:
    T_csl: float
    points: tuple[ExclusionPoint, ...]

    @property
    def statuses(self) -> dict[str, int]:
        out = {s: 0 for s in STATUSES}
        for p in self.points:
            out[p.status] += 1
        return out

    def records(self) -> list[dict]:
        return [p.record() for p in self.points]


def exclusion_curve(exp: ExperimentConfig, r_C_grid, T_csl: float, threads: int | None = None) -> ExclusionCurve:
    grid = [float(r) for r in r_C_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("r_C grid must be strictly ascending")

    def one(r: float) -> ExclusionPoint:
        res = lambda_bound(exp, r, T_csl)
        return ExclusionPoint(r, res.lambda_max, res.status, res.validity.satisfied)

    if threads is None:
        threads = int(os.environ.get("DCSL_THREADS", "1") or 1)
    if threads <= 1:
        pts = [one(r) for r in grid]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pts = list(pool.map(one, grid))
    return ExclusionCurve(float(T_csl), tuple(pts))
