"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 no exclusion below the lambda cap (bound / exclusion).  Errors are
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import re
import sys

import numpy as np

from . import langevin
from .emit import emit_table, write_atomic
from .experiments import (
    ExperimentConfig,
    exclusion_curve,
    geometry_from_dict,
    lambda_bound,
    load_experiment,
    unit_coefficients,
    validity_check,
    force_amplitude,
    scale_coefficients,
)
from .coefficients import collapse_coefficients, pair_coefficients
from .geometry import GeometryPair, Point
from .params import M0, CollapseParams, chi
from .quadrature import QuadratureError
from .spectra import (
    UnstableDynamicsError,
    csl_force_psd,
    dns_cantilever,
    dns_relative,
    spectral_temperature,
    system_temperature,
    temp_shift,
)

__all__ = ["main", "run", "parse_grid", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "EXIT_NO_EXCLUSION"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NO_EXCLUSION = 4


class ConfigError(ValueError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        m = re.search(r"argument (\S+?):", message)
        field = m.group(1).split("/")[-1].lstrip("-") if m else None
        if field is None and "required" in message:
            m = re.search(r"arguments are required: (\S+)", message)
            field = m.group(1).split("/")[-1].lstrip("-").rstrip(",") if m else None
        raise ConfigError(message, field)


# -- argument types --------------------------------------------------------------------


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _positive(text: str) -> float:
    v = _float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0: {text!r}")
    return v


def _vector(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers: {text!r}")
    return tuple(_float(p) for p in parts)


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:Nlog`` (geometric) or ``lo:hi:Nlin`` (uniform), both ends included."""
    m = re.fullmatch(r"\s*([^:]+):([^:]+):(\d+)(log|lin)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:Nlog or lo:hi:Nlin, got {text!r}")
    lo, hi, n, kind = _float(m.group(1)), _float(m.group(2)), int(m.group(3)), m.group(4)
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    if n > 1 and not hi > lo:
        raise argparse.ArgumentTypeError("grid needs hi > lo")
    if kind == "log":
        if not lo > 0:
            raise argparse.ArgumentTypeError("log grid needs lo > 0")
        return np.geomspace(lo, hi, n) if n > 1 else np.array([lo])
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def _grid_type(text: str) -> np.ndarray:
    return parse_grid(text)


# -- parser ----------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $DCSL_THREADS or 1)")


def _model(p: argparse.ArgumentParser, lam_required: bool = True) -> None:
    p.add_argument("--lambda", dest="lam", type=_float, required=lam_required, help="collapse rate (1/s)")
    p.add_argument("--rc", dest="r_C", type=_positive, required=True, help="correlation length r_C (m)")
    p.add_argument("--tcsl", dest="T_csl", type=_positive, default=math.inf, help="noise temperature (K); inf for CSL")


def _exp(p: argparse.ArgumentParser) -> None:
    p.add_argument("--exp", required=True, help="experiment JSON file or catalog name")
    p.add_argument("--mass-model", choices=("composite", "sphere_only"), default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dcsl", description="dCSL collapse-noise coefficients, spectra, simulation and bounds")
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", help="diffusion/dissipation coefficients of a body or pair")
    _common(p)
    _model(p)
    p.add_argument("--geometry", required=True, help="point|sphere|cuboid|cylinder or a geometry/experiment JSON file")
    p.add_argument("--mass-kg", type=_positive)
    p.add_argument("--radius-m", type=_positive)
    p.add_argument("--length-m", type=_positive)
    p.add_argument("--density-kg-m3", type=_positive)
    p.add_argument("--sides-m", type=_vector)
    p.add_argument("--cyl-axis", type=_vector, default=(0.0, 0.0, 1.0))
    p.add_argument("--separation-m", type=_vector, help="make a pair displaced by this vector")
    p.add_argument("--axis", type=_vector, help="motion direction (default x, or along the separation)")

    p = sub.add_parser("spectrum", help="density noise spectrum on a frequency grid")
    _common(p)
    _exp(p)
    _model(p)
    p.add_argument("--omega-grid", type=_grid_type, required=True, help="rad/s, lo:hi:Nlog|Nlin")

    p = sub.add_parser("temp-shift", help="collapse-induced temperature shift of a resonator")
    _common(p)
    _exp(p)
    _model(p)
    p.add_argument("--spectral", action="store_true", help="also integrate the spectrum numerically")

    p = sub.add_parser("force-psd", help="collapse force noise on the relative coordinate of a pair")
    _common(p)
    _exp(p)
    _model(p)
    p.add_argument("--omega-grid", type=_grid_type, required=True, help="rad/s, lo:hi:Nlog|Nlin")

    p = sub.add_parser("simulate", help="one Langevin trajectory")
    _common(p)
    _exp(p)
    _model(p)
    p.add_argument("--duration-s", type=_positive, required=True)
    p.add_argument("--dt-s", type=_positive, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trajectory", type=int, default=0)
    p.add_argument("--x0-m", type=_float, default=0.0)
    p.add_argument("--stride", type=int, default=1, help="emit every n-th sample")

    p = sub.add_parser("validate-sim", help="ensemble PSD against the analytic spectrum")
    _common(p)
    _exp(p)
    _model(p)
    p.add_argument("--trajectories", type=int, default=200)
    p.add_argument("--tolerance", type=_positive, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt-s", type=_positive)
    p.add_argument("--duration-s", type=_positive)
    p.add_argument("--segment-length", type=int)

    p = sub.add_parser("validity", help="small-displacement validity margins")
    _common(p)
    _exp(p)
    _model(p, lam_required=False)

    p = sub.add_parser("bound", help="lambda upper bound at one (r_C, T_csl)")
    _common(p)
    _exp(p)
    p.add_argument("--rc", dest="r_C", type=_positive, required=True)
    p.add_argument("--tcsl", dest="T_csl", type=_positive, default=math.inf)
    p.add_argument("--datum", type=_positive, help="override the experiment's bound datum")

    p = sub.add_parser("exclusion", help="lambda bound over an r_C grid")
    _common(p)
    _exp(p)
    p.add_argument("--tcsl", dest="T_csl", type=_positive, default=math.inf)
    p.add_argument("--rc-grid", type=_grid_type, required=True, help="m, lo:hi:Nlog|Nlin")
    p.add_argument("--datum", type=_positive, help="override the experiment's bound datum")
    return ap


# -- helpers ---------------------------------------------------------------------------


def _params(a) -> CollapseParams:
    lam = a.lam if getattr(a, "lam", None) is not None else 0.0
    return CollapseParams(lam, a.r_C, a.T_csl)


def _load(a) -> ExperimentConfig:
    over = {} if a.mass_model is None else {"mass_model": a.mass_model}
    exp = load_experiment(a.exp, **over)
    if getattr(a, "datum", None) is not None:
        exp = exp.with_datum(a.datum)
    return exp


def _coefficients(exp: ExperimentConfig, params: CollapseParams):
    return scale_coefficients(unit_coefficients(exp, params.r_C, params.T_csl), params.lam)


def _threads(a) -> int:
    if a.threads is not None:
        return max(1, a.threads)
    return max(1, int(os.environ.get("DCSL_THREADS", "1") or 1))


def _geometry(a):
    kind = a.geometry.lower()
    if kind == "point":
        g = Point(a.mass_kg if a.mass_kg is not None else M0)
    elif kind in ("sphere", "cuboid", "box", "cylinder"):
        d = {"type": kind}
        for flag, key in (
            ("mass_kg", "mass_kg"),
            ("radius_m", "radius_m"),
            ("length_m", "length_m"),
            ("density_kg_m3", "density_kg_m3"),
        ):
            if getattr(a, flag) is not None:
                d[key] = getattr(a, flag)
        if a.sides_m is not None:
            d["sides_m"] = list(a.sides_m)
        if kind == "cylinder":
            d["axis"] = list(a.cyl_axis)
        try:
            g = geometry_from_dict(d)
        except KeyError as exc:
            raise ConfigError(f"{kind} needs {exc.args[0]}", exc.args[0]) from None
    elif os.path.exists(a.geometry):
        with open(a.geometry, encoding="utf-8") as fh:
            d = json.load(fh)
        g = geometry_from_dict(d.get("geometry", d))
    else:
        raise ConfigError(f"unknown geometry {a.geometry!r}", "geometry")
    if a.separation_m is not None:
        if isinstance(g, GeometryPair):
            raise ConfigError("geometry is already a pair", "separation-m")
        g = GeometryPair(g, a.separation_m)
    return g


def _emit(a, records, columns=None) -> None:
    data = emit_table(records, a.format, columns)
    if a.out:
        write_atomic(a.out, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


# -- subcommands -----------------------------------------------------------------------


def _cmd_coeffs(a) -> int:
    params = _params(a)
    g = _geometry(a)
    rec = {"lambda_1_s": params.lam, "r_C_m": params.r_C, "T_csl_K": params.T_csl, "chi": chi(params)}
    if isinstance(g, GeometryPair):
        c = pair_coefficients(g, params, a.axis)
        rec.update(
            eta_1_m2_s=c.eta,
            sigma_1_m2_s=c.sigma,
            omega_coupling_1_kg_m3=c.omega_coupling,
            gamma_csl_1_s=c.gamma_csl,
            varkappa_s_kg=c.varkappa,
            varkappa_m_s=c.varkappa * c.mass,
        )
    else:
        c = collapse_coefficients(g, params, a.axis or (1.0, 0.0, 0.0))
        rec.update(eta_1_m2_s=c.eta, gamma_csl_1_s=c.gamma_csl, varkappa_s_kg=c.varkappa, varkappa_m_s=c.varkappa_m)
    _emit(a, [rec])
    return EXIT_OK


def _cmd_spectrum(a) -> int:
    exp = _load(a)
    c = _coefficients(exp, _params(a))
    w = a.omega_grid
    s = dns_relative(w, exp.mech, c) if exp.is_pair else dns_cantilever(w, exp.mech, c)
    _emit(a, [{"omega_rad_s": float(x), "S_xx_m2_s": float(y)} for x, y in zip(w, s)], ["omega_rad_s", "S_xx_m2_s"])
    return EXIT_OK


def _cmd_temp_shift(a) -> int:
    exp = _load(a)
    if exp.is_pair:
        raise ConfigError("temp-shift needs a single-body experiment", "exp")
    c = _coefficients(exp, _params(a))
    rec = {"delta_T_K": temp_shift(exp.mech, c), "T_system_K": system_temperature(exp.mech, c)}
    if a.spectral:
        rec["T_spectral_K"] = spectral_temperature(exp.mech, c)
    _emit(a, [rec])
    return EXIT_OK


def _cmd_force_psd(a) -> int:
    exp = _load(a)
    if not exp.is_pair:
        raise ConfigError("force-psd needs a pair experiment", "exp")
    c = _coefficients(exp, _params(a))
    w = a.omega_grid
    s = np.broadcast_to(csl_force_psd(w, exp.mech, c), w.shape)
    amp = force_amplitude(s)
    recs = [{"omega_rad_s": float(x), "S_FF_N2_s": float(y), "S_F_one_sided_N_sqrtHz": float(z)} for x, y, z in zip(w, s, amp)]
    _emit(a, recs, ["omega_rad_s", "S_FF_N2_s", "S_F_one_sided_N_sqrtHz"])
    return EXIT_OK


def _cmd_simulate(a) -> int:
    exp = _load(a)
    c = _coefficients(exp, _params(a))
    if a.stride < 1:
        raise ConfigError("stride must be >= 1", "stride")
    tr = langevin.simulate(exp.mech, c, a.duration_s, a.dt_s, a.seed, trajectory=a.trajectory, x0=a.x0_m)
    sl = slice(None, None, a.stride)
    recs = [{"t_s": float(t), "x_m": float(x), "p_kg_m_s": float(p)} for t, x, p in zip(tr.t[sl], tr.x[sl], tr.p[sl])]
    _emit(a, recs, ["t_s", "x_m", "p_kg_m_s"])
    return EXIT_OK


def _cmd_validate(a) -> int:
    exp = _load(a)
    c = _coefficients(exp, _params(a))
    rep = langevin.validate_spectrum(
        exp.mech,
        c,
        a.tolerance,
        n_trajectories=a.trajectories,
        duration=a.duration_s,
        dt=a.dt_s,
        segment_length=a.segment_length,
        seed=a.seed,
        threads=_threads(a),
    )
    rec = {
        "passed": rep.passed,
        "max_deviation_se": rep.max_deviation,
        "tolerance_se": rep.tolerance,
        "n_bins": int(rep.omega.size),
        "n_trajectories": rep.n_trajectories,
        "n_segments": rep.n_segments,
    }
    _emit(a, [rec])
    return EXIT_OK


def _cmd_validity(a) -> int:
    exp = _load(a)
    v = validity_check(exp, _params(a))
    _emit(a, [{k: getattr(v, k) for k in (f.name for f in dataclasses.fields(v))}])
    return EXIT_OK


def _cmd_bound(a) -> int:
    exp = _load(a)
    r = lambda_bound(exp, a.r_C, a.T_csl)
    rec = {
        "r_C_m": a.r_C,
        "T_csl_K": a.T_csl,
        "lambda_max_1_s": r.lambda_max,
        "status": r.status,
        "validity": r.validity.satisfied,
        "ratio": r.ratio,
    }
    _emit(a, [rec])
    return EXIT_NO_EXCLUSION if r.status == "no-exclusion-below-cap" else EXIT_OK


def _cmd_exclusion(a) -> int:
    exp = _load(a)
    curve = exclusion_curve(exp, a.rc_grid, a.T_csl, threads=_threads(a))
    _emit(a, curve.records(), ["r_C_m", "lambda_max_1_s", "status", "validity"])
    return EXIT_NO_EXCLUSION if curve.statuses["no-exclusion-below-cap"] else EXIT_OK


_COMMANDS = {
    "coeffs": _cmd_coeffs,
    "spectrum": _cmd_spectrum,
    "temp-shift": _cmd_temp_shift,
    "force-psd": _cmd_force_psd,
    "simulate": _cmd_simulate,
    "validate-sim": _cmd_validate,
    "validity": _cmd_validity,
    "bound": _cmd_bound,
    "exclusion": _cmd_exclusion,
}


def _fail(code: int, kind: str, message: str, field: str | None = None) -> int:
    err = {"error": kind, "message": message}
    if field is not None:
        err["field"] = field
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), exc.field)
    try:
        return _COMMANDS[a.subcommand](a)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), exc.field)
    except (FileNotFoundError, KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))
    except (QuadratureError, UnstableDynamicsError, langevin.SimulationError, ArithmeticError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", str(exc))


def main() -> None:
    sys.exit(run())
