"""Classical-noise Langevin simulation of the collapse-driven resonator and PSD estimation.

The linear equations ``dX = (M X + b) dt + dN`` are advanced with an
exponential Euler-Maruyama step: the drift is propagated exactly through
``A = exp(M dt)`` and each Gaussian increment is injected at mid-step,
``X_{n+1} = A X_n + c + exp(M dt/2) dN_n``.  The increments themselves are
the independent white noises of the surrogate (variance ``intensity * dt``).

Two backends run the inner loop: the compiled ``dcsl._kernels`` module when
it is importable and a pure-Python twin otherwise.  ``DCSL_BACKEND=python``
forces the twin.  Both evaluate the same expression in the same order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from . import _kernels_py
from .coefficients import CollapseCoefficients, PairCoefficients
from .params import HBAR, K_B
from .spectra import MechanicalConfig, dns_cantilever, dns_relative

try:  # pragma: no cover - depends on the build
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None

__all__ = [
    "BACKEND",
    "available_backends",
    "SimulationError",
    "TrajectoryState",
    "Trajectory",
    "NoiseChannelSpec",
    "PsdEstimate",
    "ValidationReport",
    "noise_channels",
    "noise_increments",
    "simulate",
    "estimate_psd",
    "combine",
    "ensemble_psd",
    "validate_spectrum",
    "check_step",
    "INSTABILITY_FACTOR",
    "MIN_SEGMENTS",
]

INSTABILITY_FACTOR = 1e12
MIN_SEGMENTS = 8
_CHUNK = 1 << 16

Coefficients = Union[CollapseCoefficients, PairCoefficients]


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _compiled is not None else ("python",)


def _select_backend() -> str:
    want = os.environ.get("DCSL_BACKEND", "").strip().lower()
    if want == "python" or _compiled is None:
        return "python"
    return "cython"


BACKEND = _select_backend()


def _kernel(backend: str | None):
    name = BACKEND if backend is None else backend
    if name == "cython":
        if _compiled is None:
            raise ValueError("compiled kernel is not available")
        return _compiled.em_propagate
    if name == "python":
        return _kernels_py.em_propagate
    raise ValueError(f"unknown backend {name!r}")


class SimulationError(ArithmeticError):
    """The integrated state left the admissible region."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


# -- data types ------------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryState:
    x: float  # m
    p: float  # kg m/s
    t: float  # s


@dataclass(frozen=True)
class Trajectory:
    """Sampled trajectory on the uniform grid ``t = k dt``."""

    t: np.ndarray
    x: np.ndarray
    p: np.ndarray
    dt: float

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, k: int) -> TrajectoryState:
        return TrajectoryState(float(self.x[k]), float(self.p[k]), float(self.t[k]))

    def records(self):
        return [{"t_s": float(a), "x_m": float(b), "p_kg_m_s": float(c)} for a, b, c in zip(self.t, self.x, self.p)]


@dataclass(frozen=True)
class NoiseChannelSpec:
    """White-noise intensities of the surrogate.

    ``intensity`` is shared by the position-type and momentum-type collapse
    channels (``eta``, or ``2 (eta - sigma)`` for a relative coordinate);
    ``thermal`` is the bath force intensity ``2 m gamma_m k_B T``.
    """

    intensity: float  # 1/(m^2 s)
    thermal: float  # N^2 s
    x_gain: float  # multiplies w_x in dx
    p_gain: float  # multiplies w_p in dp

    def __post_init__(self) -> None:
        if not (self.intensity >= 0 and self.thermal >= 0):
            raise ValueError(f"noise intensities must be >= 0, got {self.intensity!r}, {self.thermal!r}")

    @property
    def covariance_rate(self) -> np.ndarray:
        """Diffusion matrix of (x, p) per unit time."""
        return np.diag([self.x_gain**2 * self.intensity, self.p_gain**2 * self.intensity + self.thermal])


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray  # rad/s, uniform, starting at 0
    values: np.ndarray  # m^2 s, two-sided
    n_segments: int
    stderr: np.ndarray  # absolute standard error per bin

    @property
    def relative_stderr(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.values > 0, self.stderr / self.values, np.inf)

    def records(self):
        return [
            {"omega_rad_s": float(w), "S_xx_m2_s": float(v), "stderr": float(e)}
            for w, v, e in zip(self.frequencies, self.values, self.stderr)
        ]


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    tolerance: float
    max_deviation: float  # in units of the combined standard error
    omega: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray
    n_trajectories: int
    n_segments: int

    @property
    def z(self) -> np.ndarray:
        return (self.estimate - self.analytic) / self.stderr


# -- model assembly --------------------------------------------------------------------


def _is_pair(coeffs: Coefficients) -> bool:
    return isinstance(coeffs, PairCoefficients)


def noise_channels(mech: MechanicalConfig, coeffs: Coefficients) -> NoiseChannelSpec:
    km = coeffs.varkappa
    if _is_pair(coeffs):
        # relative coordinate: collapse noise only, the bath is not part of this mode
        return NoiseChannelSpec(2.0 * max(coeffs.eta - coeffs.sigma, 0.0), 0.0, -km * HBAR, -0.5 * HBAR)
    thermal = 2.0 * mech.m * mech.gamma_m * K_B * mech.T_env
    return NoiseChannelSpec(coeffs.eta, thermal, -km * HBAR, -HBAR)


def _drift(mech: MechanicalConfig, coeffs: Coefficients) -> tuple[np.ndarray, np.ndarray]:
    gamma = mech.gamma_m + coeffs.gamma_csl
    m, w0 = mech.m, mech.omega0
    if _is_pair(coeffs):
        k = coeffs.varkappa
        M = np.array([[2.0 * k * coeffs.sigma * HBAR, 2.0 / m], [-0.5 * m * w0 * w0, -gamma]])
        omega_c = coeffs.omega_coupling if math.isfinite(coeffs.omega_coupling) else 0.0
        b = np.array([2.0 * k * omega_c * HBAR**2, 0.0])
        return M, b
    return np.array([[0.0, 1.0 / m], [-m * w0 * w0, -gamma]]), np.zeros(2)


def _propagators(M: np.ndarray, b: np.ndarray, dt: float, p_scale: float):
    """``exp(M dt)``, the drift offset and ``exp(M dt / 2)``, evaluated with p measured in ``p_scale``."""
    D = np.array([1.0, p_scale])
    Ms = M * D[None, :] / D[:, None]
    aug = np.zeros((3, 3))
    aug[:2, :2] = Ms * dt
    aug[:2, 2] = b / D * dt
    E = expm(aug)
    half = expm(Ms * (0.5 * dt))
    rescale = D[:, None] / D[None, :]
    return E[:2, :2] * rescale, E[:2, 2] * D, half * rescale


def check_step(mech: MechanicalConfig, coeffs: Coefficients, duration: float, dt: float) -> None:
    gamma = mech.gamma_m + coeffs.gamma_csl
    dt_max = min(1.0 / (50.0 * mech.omega0), 1.0 / (50.0 * gamma))
    if not (dt > 0 and dt <= dt_max):
        raise ValueError(f"dt={dt!r} must be in (0, {dt_max!r}]")
    t_min = 200.0 * 2.0 * math.pi / mech.omega0
    if not duration >= t_min:
        raise ValueError(f"duration={duration!r} must be >= 200 periods ({t_min!r} s)")


def _limits(M, b, noise: NoiseChannelSpec, x0: float, p0: float, p_scale: float) -> tuple[float, float]:
    """Instability thresholds: INSTABILITY_FACTOR times the largest of the stationary RMS,
    the stationary mean and the initial state, all compared in units where x and p/p_scale
    carry the same energy."""
    D = np.array([1.0, p_scale])
    sizes = [abs(x0), abs(p0) / p_scale, 1e-300]
    Ms = M * D[None, :] / D[:, None]
    if np.all(np.linalg.eigvals(Ms).real < 0):
        Q = noise.covariance_rate / np.outer(D, D)
        cov = solve_continuous_lyapunov(Ms, -Q)
        sizes += list(np.sqrt(np.maximum(np.diag(cov), 0.0)))
        sizes += list(np.abs(np.linalg.solve(Ms, -b / D)))
    scale = INSTABILITY_FACTOR * max(sizes)
    return float(scale), float(scale * p_scale)


def _rng(seed: int, trajectory: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trajectory,))))


def noise_increments(noise: NoiseChannelSpec, dt: float, n: int, rng: np.random.Generator):
    """Raw increments ``(dN_x, dN_p)`` of ``n`` steps and the underlying ``(dW_x, dW_p, dxi)``."""
    z = rng.standard_normal((n, 3))
    s = math.sqrt(noise.intensity * dt)
    dw_x = s * z[:, 0]
    dw_p = s * z[:, 1]
    dxi = math.sqrt(noise.thermal * dt) * z[:, 2]
    return noise.x_gain * dw_x, noise.p_gain * dw_p + dxi, (dw_x, dw_p, dxi)


def simulate(
    mech: MechanicalConfig,
    coeffs: Coefficients,
    duration: float,
    dt: float,
    seed: int,
    *,
    trajectory: int = 0,
    x0: float = 0.0,
    p0: float = 0.0,
    backend: str | None = None,
) -> Trajectory:
    """Integrate one trajectory.

    A :class:`PairCoefficients` argument selects the relative coordinate of a
    body pair (``p`` is then half the momentum difference).  The stream is
    fixed by ``(seed, trajectory)``.
    """
    check_step(mech, coeffs, duration, dt)
    kernel = _kernel(backend)
    noise = noise_channels(mech, coeffs)
    M, b = _drift(mech, coeffs)
    p_scale = mech.m * mech.omega0
    A, c, H = _propagators(M, b, dt, p_scale)
    x_lim, p_lim = _limits(M, b, noise, x0, p0, p_scale)
    n = int(math.ceil(duration / dt))
    x = np.empty(n + 1)
    p = np.empty(n + 1)
    x[0], p[0] = x0, p0
    rng = _rng(seed, trajectory)
    a00, a01, a10, a11 = (float(v) for v in A.ravel())
    c0, c1 = float(c[0]), float(c[1])
    for start in range(0, n, _CHUNK):
        m = min(_CHUNK, n - start)
        ex, ep, _ = noise_increments(noise, dt, m, rng)
        nx = np.ascontiguousarray(H[0, 0] * ex + H[0, 1] * ep)
        npn = np.ascontiguousarray(H[1, 0] * ex + H[1, 1] * ep)
        bad = kernel(x[start : start + m + 1], p[start : start + m + 1], nx, npn, a00, a01, a10, a11, c0, c1, x_lim, p_lim)
        if bad >= 0:
            step = start + bad
            raise SimulationError(
                f"unstable integration at step {step} (t={step * dt!r} s): x={x[step]!r}, p={p[step]!r}", step
            )
    return Trajectory(np.arange(n + 1) * dt, x, p, dt)


# -- spectral estimation ---------------------------------------------------------------


def _overlap_correlation(window: np.ndarray, shift: int) -> float:
    """Squared correlation of white-noise periodograms from segments offset by ``shift``."""
    if shift >= window.size:
        return 0.0
    w2 = float(np.sum(window * window))
    return float(np.sum(window[shift:] * window[: window.size - shift])) ** 2 / (w2 * w2)


def estimate_psd(series, dt: float, segment_length: int, overlap: float = 0.5) -> PsdEstimate:
    """Welch estimate (Hann window, constant detrend) of the two-sided PSD on ``w >= 0``.

    Normalised so that white noise with ``Var = W / dt`` per sample gives ``W``.
    The standard error comes from the scatter between segments, widened for
    the correlation that overlapping windows introduce.
    """
    x = np.asarray(series, dtype=float)
    n = int(segment_length)
    if n < 2:
        raise ValueError("segment_length must be >= 2")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    step = max(1, int(round(n * (1.0 - overlap))))
    k = 0 if x.size < n else 1 + (x.size - n) // step
    if k < MIN_SEGMENTS:
        raise ValueError(f"only {k} segments of length {n} fit in {x.size} samples; need >= {MIN_SEGMENTS}")
    window = np.hanning(n + 1)[:-1]  # periodic Hann
    idx = np.arange(n)[None, :] + step * np.arange(k)[:, None]
    seg = x[idx]
    seg = seg - seg.mean(axis=1, keepdims=True)
    spec = np.abs(np.fft.rfft(seg * window, axis=1)) ** 2 * (dt / float(np.sum(window * window)))
    values = spec.mean(axis=0)
    rho = sum(2.0 * (1.0 - j / k) * _overlap_correlation(window, j * step) for j in range(1, k))
    stderr = spec.std(axis=0, ddof=1) * math.sqrt((1.0 + rho) / k)
    freqs = 2.0 * math.pi * np.fft.rfftfreq(n, dt)
    return PsdEstimate(freqs, values, k, stderr)


def combine(estimates) -> PsdEstimate:
    """Average independent estimates in the given order; the SE is the scatter between them."""
    est = list(estimates)
    if len(est) < 2:
        raise ValueError("need at least two estimates to combine")
    f = est[0].frequencies
    for e in est[1:]:
        if e.frequencies.shape != f.shape or np.any(e.frequencies != f):
            raise ValueError("estimates use different frequency grids")
    stack = np.stack([e.values for e in est])
    values = stack.mean(axis=0)
    stderr = stack.std(axis=0, ddof=1) / math.sqrt(len(est))
    return PsdEstimate(f, values, sum(e.n_segments for e in est), stderr)


def _transient(mech: MechanicalConfig, coeffs: Coefficients) -> float:
    gamma = mech.gamma_m + coeffs.gamma_csl
    if _is_pair(coeffs):
        gamma -= 2.0 * coeffs.varkappa * coeffs.sigma * HBAR
    return 10.0 / gamma


def _workers(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("DCSL_THREADS", "1") or 1)
    return max(1, int(threads))


def ensemble_psd(
    mech: MechanicalConfig,
    coeffs: Coefficients,
    n_trajectories: int,
    duration: float,
    dt: float,
    seed: int,
    segment_length: int,
    overlap: float = 0.5,
    threads: int | None = None,
    backend: str | None = None,
) -> PsdEstimate:
    """Welch estimate averaged over ``n_trajectories`` independent trajectories.

    The initial ``10 / gamma`` of each trajectory is discarded.  The result
    does not depend on the thread count.
    """
    skip = int(math.ceil(_transient(mech, coeffs) / dt))

    def one(j: int) -> PsdEstimate:
        tr = simulate(mech, coeffs, duration + skip * dt, dt, seed, trajectory=j, backend=backend)
        return estimate_psd(tr.x[skip:], dt, segment_length, overlap)

    workers = _workers(threads)
    if workers == 1:
        parts = [one(j) for j in range(n_trajectories)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(n_trajectories)))
    return combine(parts)


def validate_spectrum(
    mech: MechanicalConfig,
    coeffs: Coefficients,
    tolerance: float = 5.0,
    *,
    n_trajectories: int = 200,
    duration: float | None = None,
    dt: float | None = None,
    segment_length: int | None = None,
    seed: int = 0,
    analytic: Callable[[np.ndarray], np.ndarray] | None = None,
    band: tuple[float, float] = (0.5, 2.0),
    threads: int | None = None,
    backend: str | None = None,
) -> ValidationReport:
    """Compare the ensemble PSD with the analytic spectrum over ``band * omega0``.

    PASS iff every bin deviates by less than ``tolerance`` combined standard
    errors.  ``analytic`` overrides the reference spectrum (default:
    :func:`dns_cantilever`, or :func:`dns_relative` at the simulator's noise
    normalisation for a pair).
    """
    gamma = mech.gamma_m + coeffs.gamma_csl
    if dt is None:
        dt = min(1.0 / (50.0 * mech.omega0), 1.0 / (50.0 * gamma))
    if segment_length is None:
        # resolve the resonance with >= 16 bins per linewidth so window leakage stays well below the SE
        need = 16.0 * 2.0 * math.pi / (gamma * dt)
        segment_length = 1 << int(math.ceil(math.log2(need)))
    if duration is None:
        duration = max(dt * segment_length * (MIN_SEGMENTS + 1) / 2.0, 200.0 * 2.0 * math.pi / mech.omega0)
    est = ensemble_psd(mech, coeffs, n_trajectories, duration, dt, seed, segment_length, threads=threads, backend=backend)
    sel = (est.frequencies >= band[0] * mech.omega0) & (est.frequencies <= band[1] * mech.omega0)
    w = est.frequencies[sel]
    if analytic is None:
        if _is_pair(coeffs):
            ref = dns_relative(w, mech, coeffs, noise_factor=2.0)
        else:
            ref = dns_cantilever(w, mech, coeffs)
    else:
        ref = np.asarray(analytic(w), dtype=float)
    se = est.stderr[sel]
    dev = np.abs(est.values[sel] - ref) / se
    worst = float(np.max(dev)) if dev.size else math.inf
    return ValidationReport(
        passed=bool(worst < tolerance),
        tolerance=float(tolerance),
        max_deviation=worst,
        omega=w,
        estimate=est.values[sel],
        stderr=se,
        analytic=ref,
        n_trajectories=n_trajectories,
        n_segments=est.n_segments,
    )
