"""dCSL diffusion, damping and two-body correlation coefficients.

All momentum integrals are rewritten in the dimensionless variable
``q = Q r' / hbar`` with ``r' = r_C (1 + chi)``, so that the Gaussian factor is
``exp(-q^2)``.  Writing ``N = M / m0``,

    eta   = lam r_C^3 / (pi^1.5 r'^5)        * J_cos
    Omega = lam r_C^3 / (pi^1.5 hbar r'^4)   * J_sin

with ``J_cos = int d^3q (mu~/m0)^2 q_n^2 cos(q.d) e^{-q^2}`` and
``J_sin = int d^3q (mu~/m0)^2 q_n sin(q.d) e^{-q^2}`` (``d`` the separation in
units of ``r'``, ``n`` the motion axis).  The moments are evaluated per pair
of constituent bodies:

* box / box: exact one-dimensional factors built from erf and Gaussians,
  so arbitrarily many oscillations cost nothing;
* sphere / sphere (and points): one radial quadrature with panels at the
  oscillation scale;
* cylinders: closed-form disc factors (Weber's integral) times the box
  factors along the axis;
* box / sphere: a real-space surface integral of the Gaussian-blurred ball.

:func:`mc_integral` is an independent importance-sampled estimate of the
same 3D integrals built directly from :func:`dcsl.geometry.form_factor`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf, erfc, ive, spherical_jn

from .geometry import (
    Cuboid,
    Cylinder,
    GeometryPair,
    MassGeometry,
    Point,
    RigidComposite,
    Sphere,
    form_factor,
    sinc,
    sphere_amplitude,
    unit,
)
from .params import HBAR, M0, CollapseParams, chi, gamma_prime, varkappa_m
from .quadrature import QuadratureError, integrate, oscillation_breakpoints

__all__ = [
    "CollapseCoefficients",
    "PairCoefficients",
    "QuadratureError",
    "Q_MAX",
    "eta",
    "gamma_csl",
    "sigma",
    "omega_coupling",
    "collapse_coefficients",
    "pair_coefficients",
    "mc_integral",
    "mc_coefficient",
    "box_factors",
    "disc_factors",
    "blurred_ball",
    "blurred_ball_slope",
    "sphere_self_moment",
]

# Radial cutoff in q; exp(-Q_MAX^2) ~ 3e-63.
Q_MAX = 12.0
# Below this edge length (in units of r') the closed-form box factors lose
# digits to cancellation, so the 1D integral is done by quadrature instead.
BOX_SERIES_LIMIT = 0.05
# Gap (in units of r') beyond which a cross moment underflows exp(-gap^2 / 4).
NEGLIGIBLE_GAP = 60.0
# Balls smaller than this (units of r') use the ball-averaged box/point moment
# instead of the real-space surface integral, whose differences underflow.
BALL_AVERAGE_LIMIT = 1.0
# Isolated spheres larger than this use the closed-form self moment.
SPHERE_CLOSED_FORM_LIMIT = 100.0

_RTOL = 1e-10
_L1_RTOL = 1e-13
_SQRT_PI = math.sqrt(math.pi)


# -- data types ------------------------------------------------------------------------


@dataclass(frozen=True)
class CollapseCoefficients:
    eta: float  # 1/(m^2 s)
    gamma_csl: float  # 1/s
    varkappa: float  # s/kg
    axis: tuple[float, float, float]
    mass: float  # kg, mass used for N and varkappa

    @property
    def varkappa_m(self) -> float:
        return self.varkappa * self.mass


@dataclass(frozen=True)
class PairCoefficients:
    eta: float  # 1/(m^2 s), single-body value
    sigma: float  # 1/(m^2 s)
    omega_coupling: float  # 1/(kg m^3); 2 varkappa Omega hbar^2 is a velocity
    gamma_csl: float
    varkappa: float
    axis: tuple[float, float, float]
    mass: float  # kg, per body

    @property
    def K_matrix(self) -> np.ndarray:
        return np.array([[self.eta, self.sigma], [self.sigma, self.eta]])

    @property
    def relative_intensity(self) -> float:
        """eta - sigma, the strength of the noise acting on the relative coordinate."""
        return self.eta - self.sigma


# -- one-dimensional box factors -------------------------------------------------------


def _h(x: float) -> float:
    ax = abs(x)
    return -math.pi * ax * math.erfc(ax / 2.0) + 2.0 * _SQRT_PI * math.exp(-x * x / 4.0)


def _t(x: float) -> float:
    return math.copysign(math.erfc(abs(x) / 2.0), x) if x != 0.0 else 0.0


def _sgn(x: float) -> float:
    return float(x > 0) - float(x < 0)


def _k0(s: float, c: float) -> float:
    # int (1 - cos qs) cos(qc) / q^2 e^{-q^2} dq over the real line
    return math.pi * max(s - abs(c), 0.0) + 0.5 * (_h(s + c) + _h(s - c)) - _h(c)


def _k1(s: float, c: float) -> float:
    # int (1 - cos qs) sin(qc) / q e^{-q^2} dq
    signs = _sgn(c) - 0.5 * (_sgn(c + s) + _sgn(c - s))
    tails = _t(c) - 0.5 * (_t(c + s) + _t(c - s))
    return math.pi * (signs - tails)


def _k2(s: float, c: float) -> float:
    # int (1 - cos qs) cos(qc) e^{-q^2} dq
    return _SQRT_PI * (math.exp(-c * c / 4.0) - 0.5 * (math.exp(-(c + s) ** 2 / 4.0) + math.exp(-(c - s) ** 2 / 4.0)))


def _box_factors_quad(l1: float, l2: float, c: float) -> tuple[float, float, float]:
    s = 0.5 * (l1 + l2)
    if abs(c) - s > NEGLIGIBLE_GAP:
        return 0.0, 0.0, 0.0
    period = min(2.0, 2.0 * math.pi / (s + abs(c) + 1e-300))
    edges = oscillation_breakpoints(0.0, Q_MAX, period)

    def base(q):
        return sinc(q * l1 / 2.0) * sinc(q * l2 / 2.0) * np.exp(-q * q)

    out = []
    for k, trig in ((0, np.cos), (1, np.sin), (2, np.cos)):
        if k == 1 and c == 0.0:
            out.append(0.0)
            continue
        val, _ = integrate(lambda q, k=k, trig=trig: q**k * base(q) * trig(q * c), edges, rtol=_RTOL, l1_rtol=_L1_RTOL)
        out.append(2.0 * val)
    return tuple(out)


def box_factors(l1: float, l2: float, c: float) -> tuple[float, float, float]:
    """One-axis factors ``(B0, B1, B2)`` for a pair of boxes.

    ``B_k = int q^k sinc(q l1/2) sinc(q l2/2) trig(q c) e^{-q^2} dq`` over the
    real line, with ``trig = cos`` for even ``k`` and ``sin`` for ``k = 1``;
    lengths and offset in units of ``r'``.
    """
    if min(l1, l2) < BOX_SERIES_LIMIT:
        return _box_factors_quad(l1, l2, c)
    s = 0.5 * (l1 + l2)
    d = 0.5 * abs(l1 - l2)
    scale = 2.0 / (l1 * l2)
    b0 = scale * (_k0(s, c) - _k0(d, c))
    b1 = scale * (_k1(s, c) - _k1(d, c))
    b2 = scale * (_k2(s, c) - _k2(d, c))
    return b0, b1, b2


def _box_moments(sides1, sides2, delta, n) -> tuple[float, float]:
    f = [box_factors(sides1[i], sides2[i], delta[i]) for i in range(3)]
    b0 = [x[0] for x in f]
    b1 = [x[1] for x in f]
    b2 = [x[2] for x in f]
    j_cos = 0.0
    j_sin = 0.0
    for i in range(3):
        others = [k for k in range(3) if k != i]
        prod0 = b0[others[0]] * b0[others[1]]
        j_cos += n[i] * n[i] * b2[i] * prod0
        j_sin += n[i] * b1[i] * prod0
        for j in others:
            (k,) = [m for m in others if m != j]
            j_cos -= n[i] * n[j] * b1[i] * b1[j] * b0[k]
    return j_cos, j_sin


# -- discs -----------------------------------------------------------------------------


def _ive1(w):
    # scipy's ive(1, w) returns NaN for w above ~1e9; use the Hankel expansion there.
    w = np.asarray(w, dtype=float)
    big = w > 1e6
    wb = np.where(big, w, 1.0)
    asym = (1.0 - 0.375 / wb - 0.1171875 / wb**2) / np.sqrt(2.0 * math.pi * wb)
    return np.where(big, asym, ive(1, np.where(big, 1.0, w)))


def _ive_over_w(w):
    w = np.asarray(w, dtype=float)
    small = w < 1e-8
    ws = np.where(small, 1.0, w)
    return np.where(small, 0.5 - w / 2.0, _ive1(ws) / ws)


def disc_factors(rho: float) -> tuple[float, float]:
    """Transverse factors ``(D0, D2)`` of a disc of radius ``rho`` (units of r').

    ``D0 = int d^2q (2 J1(q rho)/(q rho))^2 e^{-q^2}`` and ``D2`` is the same
    with an extra ``q_e^2`` for one fixed transverse direction ``e``.
    """
    w0 = 0.5 * rho * rho
    d2 = 2.0 * math.pi / rho**2 * float(_ive1(w0)) if w0 > 1e-8 else math.pi / 2.0 * (1.0 - w0)
    if w0 <= 1.0:
        if w0 < 1e-8:
            return math.pi * (1.0 - w0 / 2.0), d2
        inner, _ = integrate(_ive_over_w, np.linspace(0.0, w0, 9), rtol=1e-13)
        d0 = 4.0 * math.pi / rho**2 * inner
    else:
        # int_0^inf ive(1, w)/w dw = 1; the tail is mapped onto t in (0, 1] by w = w0/t^2.
        def tail_integrand(t):
            return 2.0 * _ive1(w0 / (t * t)) / t

        tail, _ = integrate(tail_integrand, np.linspace(0.0, 1.0, 9), rtol=1e-13)
        d0 = 4.0 * math.pi / rho**2 * (1.0 - tail)
    return d0, d2


# -- spheres ---------------------------------------------------------------------------


def _sph_j(order: int, z):
    # scipy's spherical_jn underflows to 0 or nan for z below ~1e-200
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, z, 0.0)
    z2 = zs * zs
    if order == 1:
        series = zs / 3.0 * (1.0 - z2 / 10.0 + z2 * z2 / 280.0)
    else:
        series = z2 / 15.0 * (1.0 - z2 / 14.0 + z2 * z2 / 504.0)
    return np.where(small, series, spherical_jn(order, np.where(small, 1.0, z)))


def _sphere_moments(rho1: float, rho2: float, delta, n) -> tuple[float, float]:
    dist = math.hypot(*delta)
    if dist - rho1 - rho2 > NEGLIGIBLE_GAP:
        return 0.0, 0.0
    if dist == 0.0 and rho1 == rho2 and rho1 > SPHERE_CLOSED_FORM_LIMIT:
        return sphere_self_moment(rho1), 0.0
    if dist > 0.0:
        cos_t = float(np.dot(n, delta)) / dist
    else:
        cos_t = 0.0
    p2 = 1.5 * cos_t * cos_t - 0.5
    period = min(2.0, 2.0 * math.pi / (rho1 + rho2 + dist + 1e-300))
    edges = oscillation_breakpoints(0.0, Q_MAX, period)

    def radial(q):
        return sphere_amplitude(q * rho1) * sphere_amplitude(q * rho2) * np.exp(-q * q)

    def cos_integrand(q):
        if dist == 0.0:
            ang = 1.0
        else:
            z = q * dist
            ang = spherical_jn(0, z) - 2.0 * p2 * _sph_j(2, z)
        return q**4 * radial(q) * ang

    j_cos, _ = integrate(cos_integrand, edges, rtol=_RTOL, l1_rtol=_L1_RTOL)
    j_cos *= 4.0 * math.pi / 3.0
    j_sin = 0.0
    if dist > 0.0 and cos_t != 0.0:
        val, _ = integrate(lambda q: q**3 * radial(q) * _sph_j(1, q * dist), edges, rtol=_RTOL, l1_rtol=_L1_RTOL)
        j_sin = 4.0 * math.pi * cos_t * val
    return j_cos, j_sin


# -- box / sphere cross term in real space ---------------------------------------------


def blurred_ball(x, radius: float):
    """Unit ball of ``radius`` convolved with the collapse Gaussian (variance 2 per axis).

    Lengths in units of r'; ``x`` is the distance from the ball centre.
    """
    x = np.abs(np.asarray(x, dtype=float))
    R = float(radius)
    inside = x <= R
    first = np.where(
        inside,
        0.5 * (erf((R - x) / 2.0) + erf((R + x) / 2.0)),
        0.5 * (erfc((x - R) / 2.0) - erfc((x + R) / 2.0)),
    )
    xs = np.where(x > 0, x, 1.0)
    ratio = np.where(x > 0, -np.expm1(-R * xs) / xs, R)
    second = np.exp(-((R - x) ** 2) / 4.0) * ratio / _SQRT_PI
    return first - second


def _anchored_face(A: float, B: float, t: float, radius: float) -> float:
    # int_0^{pi/2} [b(sqrt(rho_max^2 + t^2)) - b(|t|)] dphi over the rectangle [0,A]x[0,B]
    if A <= 0.0 or B <= 0.0:
        return 0.0
    base = float(blurred_ball(abs(t), radius))
    split = math.atan2(B, A)

    def f(phi):
        rho = np.where(phi < split, A / np.cos(phi), B / np.sin(phi))
        return blurred_ball(np.sqrt(rho * rho + t * t), radius) - base

    val, _ = integrate(f, [0.0, split, 0.5 * math.pi], rtol=_RTOL, l1_rtol=_L1_RTOL)
    return val


def _face_flux(u_lim, v_lim, t: float, radius: float) -> float:
    total = 0.0
    for u, su in ((u_lim[1], 1.0), (u_lim[0], -1.0)):
        for v, sv in ((v_lim[1], 1.0), (v_lim[0], -1.0)):
            sign = su * sv * _sgn(u) * _sgn(v)
            if sign:
                total += sign * _anchored_face(abs(u), abs(v), t, radius)
    return t * total


def _box_point_factors(ell: float, c):
    # one-axis factors of a box against a point at offset c (vectorised over c)
    lo = c - 0.5 * ell
    hi = c + 0.5 * ell
    a0 = math.pi / ell * (erf(hi / 2.0) - erf(lo / 2.0))
    a1 = _SQRT_PI / ell * (np.exp(-lo * lo / 4.0) - np.exp(-hi * hi / 4.0))
    a2 = _SQRT_PI / (2.0 * ell) * (hi * np.exp(-hi * hi / 4.0) - lo * np.exp(-lo * lo / 4.0))
    return a0, a1, a2


def _box_point_moment(sides, pts, n):
    f = [_box_point_factors(sides[i], pts[:, i]) for i in range(3)]
    a0 = [v[0] for v in f]
    a1 = [v[1] for v in f]
    a2 = [v[2] for v in f]
    vals = np.zeros(pts.shape[0])
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        vals += n[i] * n[i] * a2[i] * a0[j] * a0[k]
        vals -= 2.0 * n[j] * n[k] * a1[j] * a1[k] * a0[i]
    return vals


def _ball_average_moment(sides, rho: float, centre, n, nodes: int = 24) -> float:
    """Ball average of the closed-form box/point moment (valid for balls small against r')."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * rho * (x + 1.0)
    wr = 0.5 * rho * w * r * r
    phi = np.arange(2 * nodes) * (math.pi / nodes)
    R, CT, PH = np.meshgrid(r, x, phi, indexing="ij")
    W = (wr[:, None, None] * w[None, :, None]) * np.full(PH.shape, math.pi / nodes)
    ST = np.sqrt(1.0 - CT * CT)
    pts = np.stack([R * ST * np.cos(PH), R * ST * np.sin(PH), R * CT], axis=-1).reshape(-1, 3) + np.asarray(centre)
    vals = _box_point_moment(sides, pts, n)
    return float(np.sum(vals * W.ravel())) / (4.0 / 3.0 * math.pi * rho**3)


def _box_sphere_cos_moment(sides, rho: float, centre, n) -> float:
    """J_cos between a box at the origin and a ball centred at ``centre`` (units of r')."""
    if rho == 0.0:
        return _box_point_moment(sides, np.asarray(centre, dtype=float)[None, :], n)[0]
    if rho < BALL_AVERAGE_LIMIT:
        return _ball_average_moment(sides, rho, centre, n)
    axis = [i for i in range(3) if abs(n[i]) == 1.0]
    if len(axis) != 1 or any(n[i] != 0.0 for i in range(3) if i != axis[0]):
        raise NotImplementedError("box/sphere cross term requires motion along a box edge")
    k = axis[0]
    u_ax, v_ax = [i for i in range(3) if i != k]
    half = [0.5 * s for s in sides]
    u_lim = (-half[u_ax] - centre[u_ax], half[u_ax] - centre[u_ax])
    v_lim = (-half[v_ax] - centre[v_ax], half[v_ax] - centre[v_ax])
    flux = _face_flux(u_lim, v_lim, half[k] - centre[k], rho) - _face_flux(u_lim, v_lim, -half[k] - centre[k], rho)
    vol_box = sides[0] * sides[1] * sides[2]
    vol_ball = 4.0 / 3.0 * math.pi * rho**3
    # -(4 pi)^1.5 pi^1.5 flux / volumes, per unit N_box N_ball
    return -8.0 * math.pi**3 * flux / (vol_box * vol_ball)


def blurred_ball_slope(x, radius: float):
    """Radial derivative of :func:`blurred_ball`."""
    x = np.abs(np.asarray(x, dtype=float))
    R = float(radius)
    em = np.exp(-((R - x) ** 2) / 4.0)
    ep = np.exp(-((R + x) ** 2) / 4.0)
    return ((2.0 - R * x) * em - (2.0 + R * x) * ep) / (2.0 * x * x * _SQRT_PI)


def sphere_self_moment(rho: float) -> float:
    """Closed-form J_cos of a single ball per unit N^2 (divergence theorem on the ball surface).

    Loses digits to cancellation for small ``rho``; the radial quadrature covers that range.
    """
    return -6.0 * math.pi**2 * float(blurred_ball_slope(rho, rho)) / rho**4


# -- moment dispatch -------------------------------------------------------------------


def _scaled(body, rp: float):
    if isinstance(body, Point):
        return ("sphere", 0.0)
    if isinstance(body, Sphere):
        return ("sphere", body.radius / rp)
    if isinstance(body, Cuboid):
        return ("box", tuple(s / rp for s in body.sides))
    if isinstance(body, Cylinder):
        return ("cylinder", (body.radius / rp, body.length / rp, body.axis))
    raise TypeError(f"unsupported geometry {type(body).__name__}")


def _cylinder_moments(cyl, delta, n) -> tuple[float, float]:
    rho, ell, ax = cyl
    ax = np.asarray(ax)
    along = float(np.dot(delta, ax))
    if np.linalg.norm(np.asarray(delta) - along * ax) > 1e-12 * max(1.0, abs(along)):
        raise ValueError("cylinder pairs are supported only for separations along the cylinder axis")
    n_par = float(np.dot(n, ax))
    n_perp2 = max(0.0, 1.0 - n_par * n_par)
    b0, b1, b2 = box_factors(ell, ell, along)
    d0, d2 = disc_factors(rho)
    return n_par * n_par * b2 * d0 + n_perp2 * b0 * d2, n_par * b1 * d0


def _body_moments(body1, body2, delta, n) -> tuple[float, float]:
    """(J_cos, J_sin) per unit N1 N2 between two scaled bodies, second displaced by ``-delta``."""
    k1, g1 = body1
    k2, g2 = body2
    delta = tuple(float(x) for x in delta)
    n = tuple(float(x) for x in n)
    if k1 == "sphere" and k2 == "sphere":
        return _sphere_moments(g1, g2, delta, n)
    if k1 == "box" and k2 == "box":
        return _box_moments(g1, g2, delta, n)
    if k1 == "cylinder" and k2 == "cylinder" and g1 == g2:
        return _cylinder_moments(g1, delta, n)
    if {k1, k2} == {"box", "sphere"}:
        sides, rho = (g1, g2) if k1 == "box" else (g2, g1)
        # The cos moment is even in delta, so the ball may sit at +delta from the box.
        # No sine route: NaN marks it, and it cancels from self terms by antisymmetry.
        return _box_sphere_cos_moment(sides, rho, delta, n), math.nan
    raise NotImplementedError(f"no coefficient route for {k1}/{k2}")


def _parts(g: MassGeometry):
    if isinstance(g, RigidComposite):
        return [(body, np.asarray(off)) for body, off in g.parts]
    return [(g, np.zeros(3))]


@lru_cache(maxsize=4096)
def _moments(g: MassGeometry, rp: float, n: tuple, separation: tuple) -> tuple[float, float]:
    """(J_cos, J_sin) of ``|mu~|^2`` for geometry ``g`` at the given pair separation (m)."""
    parts = _parts(g)
    sep = np.asarray(separation) / rp
    nv = np.asarray(n)
    j_cos = 0.0
    j_sin = 0.0 if any(separation) else math.nan
    for b1, o1 in parts:
        s1 = _scaled(b1, rp)
        n1 = b1.mass / M0
        for b2, o2 in parts:
            s2 = _scaled(b2, rp)
            n2 = b2.mass / M0
            delta = (o1 - o2) / rp + sep
            c, s = _body_moments(s1, s2, delta, nv)
            j_cos += n1 * n2 * c
            j_sin += n1 * n2 * s
    return j_cos, j_sin


def _eta_scale(params: CollapseParams) -> tuple[float, float]:
    rp = params.r_C * (1.0 + chi(params))
    return rp, params.r_C**3 / (math.pi**1.5 * rp**5)


def _axis(axis) -> tuple[float, float, float]:
    return unit(axis)


# -- public coefficient functions ------------------------------------------------------


def eta(g: MassGeometry, params: CollapseParams, axis=(1.0, 0.0, 0.0)) -> float:
    """Position-diffusion coefficient for motion along ``axis``, in 1/(m^2 s)."""
    if isinstance(g, GeometryPair):
        g = g.base
    rp, scale = _eta_scale(params)
    j_cos, _ = _moments(g, rp, _axis(axis), (0.0, 0.0, 0.0))
    return params.lam * (scale * j_cos)


def gamma_csl(g: MassGeometry, params: CollapseParams, axis=(1.0, 0.0, 0.0), mass: float | None = None) -> float:
    """Collapse-induced damping rate eta * 4 r_C^2 chi (1 + chi) / N (1/s).

    ``mass`` overrides the geometric mass in N, for bodies whose dynamical
    (effective) mass differs from the mass generating the collapse noise.
    """
    m = (g.base.mass if isinstance(g, GeometryPair) else g.mass) if mass is None else mass
    if params.is_csl or params.lam == 0.0:
        return 0.0
    return eta(g, params, axis) * gamma_prime(params, m)


def _pair_axis(p: GeometryPair, axis) -> tuple[float, float, float]:
    if axis is not None:
        return _axis(axis)
    if p.distance == 0.0:
        return (1.0, 0.0, 0.0)
    return _axis(p.separation)


def sigma(p: GeometryPair, params: CollapseParams, axis=None) -> float:
    """Cosine-weighted two-body correlation coefficient, 1/(m^2 s).

    ``axis`` defaults to the direction of the separation.
    """
    n = _pair_axis(p, axis)
    rp, scale = _eta_scale(params)
    if p.distance == 0.0:
        return eta(p.base, params, n)
    j_cos, _ = _moments(p.base, rp, n, p.separation)
    return params.lam * (scale * j_cos)


def omega_coupling(p: GeometryPair, params: CollapseParams, axis=None) -> float:
    """Sine-weighted two-body coefficient Omega, in 1/(kg m^3)."""
    n = _pair_axis(p, axis)
    if p.distance == 0.0:
        return 0.0
    rp, scale = _eta_scale(params)
    _, j_sin = _moments(p.base, rp, n, p.separation)
    if math.isnan(j_sin):
        raise NotImplementedError("Omega is not available for this pair geometry")
    return params.lam * (scale * rp / HBAR * j_sin)


def collapse_coefficients(
    g: MassGeometry, params: CollapseParams, axis=(1.0, 0.0, 0.0), mass: float | None = None
) -> CollapseCoefficients:
    n = _axis(axis)
    m = g.mass if mass is None else float(mass)
    if not m > 0:
        raise ValueError("mass must be positive")
    e = eta(g, params, n)
    gam = 0.0 if (params.is_csl or params.lam == 0.0) else e * gamma_prime(params, m)
    return CollapseCoefficients(eta=e, gamma_csl=gam, varkappa=varkappa_m(params) / m, axis=n, mass=m)


def pair_coefficients(
    p: GeometryPair, params: CollapseParams, axis=None, mass: float | None = None
) -> PairCoefficients:
    n = _pair_axis(p, axis)
    single = collapse_coefficients(p.base, params, n, mass)
    return PairCoefficients(
        eta=single.eta,
        sigma=sigma(p, params, n),
        omega_coupling=omega_coupling(p, params, n),
        gamma_csl=single.gamma_csl,
        varkappa=single.varkappa,
        axis=n,
        mass=single.mass,
    )


# -- Monte Carlo oracle ----------------------------------------------------------------


def mc_integral(weight, samples: int, seed: int, chunk: int = 1 << 20):
    """Estimate ``int d^3q weight(q) exp(-|q|^2)`` by sampling ``q ~ N(0, I/2)``.

    ``weight`` maps an ``(n, 3)`` array to ``n`` real values, or to an
    ``(n, k)`` array to estimate ``k`` integrals from the same samples.
    Returns the estimate and its standard error (floats, or length-``k``
    arrays); a fixed seed gives identical output.
    """
    samples = int(samples)
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    rng = np.random.Generator(np.random.Philox(seed))
    count = 0
    mean = 0.0
    m2 = 0.0
    while count < samples:
        n = min(chunk, samples - count)
        q = rng.standard_normal((n, 3)) * math.sqrt(0.5)
        w = np.asarray(weight(q), dtype=float)
        c_mean = np.mean(w, axis=0)
        c_m2 = np.sum((w - c_mean) ** 2, axis=0)
        tot = count + n
        d = c_mean - mean
        mean = mean + d * n / tot
        m2 = m2 + c_m2 + d * d * count * n / tot
        count = tot
    norm = math.pi**1.5
    se = np.sqrt(m2 / (count - 1) / count)
    if np.ndim(mean) == 0:
        return float(norm * mean), float(norm * se)
    return norm * mean, norm * se


def mc_coefficient(
    target: MassGeometry | GeometryPair,
    params: CollapseParams,
    kind="eta",
    axis=None,
    samples: int = 1_000_000,
    seed: int = 0,
):
    """Monte Carlo estimate (value, standard error) of ``eta``, ``sigma`` or ``omega``.

    ``kind`` may also be a sequence of these names; the estimates then share
    one sample set and come back as arrays in the same order.
    """
    kinds = (kind,) if isinstance(kind, str) else tuple(kind)
    for k in kinds:
        if k not in ("eta", "sigma", "omega"):
            raise ValueError(f"unknown coefficient kind {k!r}")
    if isinstance(target, GeometryPair):
        g, sep = target.base, np.asarray(target.separation)
        n = np.asarray(_pair_axis(target, axis))
    else:
        g, sep = target, np.zeros(3)
        n = np.asarray(_axis(axis if axis is not None else (1.0, 0.0, 0.0)))
    rp, scale = _eta_scale(params)

    def weight(q):
        Q = q * (HBAR / rp)
        mu = form_factor(g, Q) / M0
        mod2 = (mu * np.conj(mu)).real
        qn = q @ n
        phase = q @ (sep / rp)
        cols = []
        for k in kinds:
            if k == "eta":
                cols.append(mod2 * qn * qn)
            elif k == "sigma":
                cols.append(mod2 * qn * qn * np.cos(phase))
            else:
                cols.append(mod2 * qn * np.sin(phase))
        return cols[0] if len(cols) == 1 else np.stack(cols, axis=1)

    est, se = mc_integral(weight, samples, seed)
    factor = np.array([params.lam * scale * (rp / HBAR if k == "omega" else 1.0) for k in kinds])
    if len(kinds) == 1:
        return float(factor[0] * est), float(factor[0] * se)
    return factor * est, factor * se
