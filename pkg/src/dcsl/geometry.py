"""Homogeneous mass distributions and their Fourier form factors.

The form factor of a density ``mu(x)`` is ``mu~(Q) = int mu(x) exp(i Q.x / hbar) dx``
with ``Q`` a momentum (kg m/s).  Every body is centred on its own origin, so
the form factors of the symmetric shapes are real; offsets and pair
displacements enter as pure phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import j1, spherical_jn

from .params import HBAR, M0

__all__ = [
    "Point",
    "Sphere",
    "Cylinder",
    "Cuboid",
    "RigidComposite",
    "MassGeometry",
    "GeometryPair",
    "SERIES_SWITCH",
    "sinc",
    "sphere_amplitude",
    "disc_amplitude",
    "form_factor",
    "pair_form_factor",
    "nucleon_count",
    "unit",
]

# Below this argument the removable singularities use a 4-term Taylor series.
SERIES_SWITCH = 1e-4


def unit(v) -> tuple[float, float, float]:
    a = np.asarray(v, dtype=float).reshape(3)
    n = math.hypot(*a)
    if not n > 0 or not math.isfinite(n):
        raise ValueError(f"direction must be a finite non-zero 3-vector, got {v!r}")
    return tuple(float(c) for c in a / n)


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be finite and positive, got {value!r}")
    return value


@dataclass(frozen=True)
class Point:
    mass: float

    def __post_init__(self) -> None:
        _positive("mass", self.mass)

    @property
    def volume(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Sphere:
    radius: float
    density: float

    def __post_init__(self) -> None:
        _positive("radius", self.radius)
        _positive("density", self.density)

    @classmethod
    def from_mass(cls, radius: float, mass: float) -> "Sphere":
        return cls(radius, mass / (4.0 / 3.0 * math.pi * radius**3))

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass(frozen=True)
class Cylinder:
    radius: float
    length: float
    density: float
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self) -> None:
        _positive("radius", self.radius)
        _positive("length", self.length)
        _positive("density", self.density)
        object.__setattr__(self, "axis", unit(self.axis))

    @classmethod
    def from_mass(cls, radius: float, length: float, mass: float, axis=(0.0, 0.0, 1.0)) -> "Cylinder":
        return cls(radius, length, mass / (math.pi * radius**2 * length), axis)

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * self.length

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass(frozen=True)
class Cuboid:
    """Box with edges ``a``, ``b``, ``c`` along the x, y, z axes."""

    a: float
    b: float
    c: float
    density: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "density"):
            _positive(name, getattr(self, name))

    @classmethod
    def from_mass(cls, a: float, b: float, c: float, mass: float) -> "Cuboid":
        return cls(a, b, c, mass / (a * b * c))

    @property
    def sides(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    @property
    def volume(self) -> float:
        return self.a * self.b * self.c

    @property
    def mass(self) -> float:
        return self.density * self.volume


@dataclass(frozen=True)
class RigidComposite:
    """Several bodies moving as one rigid object.

    ``parts`` holds ``(body, offset)`` pairs; offsets are the body centres in a
    common frame (m).  Only the relative offsets are physical.
    """

    parts: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        parts = tuple((body, tuple(float(c) for c in np.asarray(off, float).reshape(3))) for body, off in self.parts)
        if len(parts) < 1:
            raise ValueError("composite needs at least one part")
        for body, _ in parts:
            if isinstance(body, RigidComposite):
                raise ValueError("nested composites are not supported")
        object.__setattr__(self, "parts", parts)

    @property
    def volume(self) -> float:
        return sum(b.volume for b, _ in self.parts)

    @property
    def mass(self) -> float:
        return sum(b.mass for b, _ in self.parts)


MassGeometry = Union[Point, Sphere, Cylinder, Cuboid, RigidComposite]


@dataclass(frozen=True)
class GeometryPair:
    """Two identical bodies, the second displaced by ``separation`` (m)."""

    base: MassGeometry
    separation: tuple[float, float, float]

    def __post_init__(self) -> None:
        sep = np.asarray(self.separation, dtype=float).reshape(3)
        if not np.all(np.isfinite(sep)):
            raise ValueError("separation must be finite")
        object.__setattr__(self, "separation", tuple(float(c) for c in sep))

    @property
    def distance(self) -> float:
        return math.hypot(*self.separation)

    @property
    def mass(self) -> float:
        """Mass of a single body of the pair."""
        return self.base.mass


# -- removable-singularity helpers -------------------------------------------------


def sinc(x):
    """sin(x)/x with the Taylor branch below :data:`SERIES_SWITCH`."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    xs = np.where(small, 1.0, x)
    out = np.sin(xs) / xs
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2**2 / 120.0 - x2**3 / 5040.0
    return np.where(small, series, out)


def sphere_amplitude(u):
    """Normalised sphere form factor 3 (sin u - u cos u) / u^3."""
    u = np.abs(np.asarray(u, dtype=float))
    small = u < SERIES_SWITCH
    us = np.where(small, 1.0, u)
    out = 3.0 * spherical_jn(1, us) / us
    u2 = u * u
    series = 1.0 - u2 / 10.0 + u2**2 / 280.0 - u2**3 / 15120.0
    return np.where(small, series, out)


def disc_amplitude(v):
    """Normalised disc (cylinder cross-section) factor 2 J1(v) / v."""
    v = np.abs(np.asarray(v, dtype=float))
    small = v < SERIES_SWITCH
    vs = np.where(small, 1.0, v)
    out = 2.0 * j1(vs) / vs
    v2 = v * v
    series = 1.0 - v2 / 8.0 + v2**2 / 192.0 - v2**3 / 9216.0
    return np.where(small, series, out)


# -- form factors ----------------------------------------------------------------------


def _as_q(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.shape[-1] != 3:
        raise ValueError("Q must have a trailing dimension of 3")
    return Q


def form_factor(g: MassGeometry, Q) -> np.ndarray:
    """Fourier transform of the mass density at momenta ``Q`` (shape ``(..., 3)``), in kg.

    Returns a complex array of shape ``Q.shape[:-1]``.
    """
    Q = _as_q(Q)
    if isinstance(g, Point):
        return np.full(Q.shape[:-1], g.mass, dtype=complex)
    if isinstance(g, Sphere):
        u = np.linalg.norm(Q, axis=-1) * g.radius / HBAR
        return (g.mass * sphere_amplitude(u)).astype(complex)
    if isinstance(g, Cuboid):
        out = np.full(Q.shape[:-1], g.mass)
        for i, side in enumerate(g.sides):
            out = out * sinc(Q[..., i] * side / (2.0 * HBAR))
        return out.astype(complex)
    if isinstance(g, Cylinder):
        n = np.asarray(g.axis)
        q_par = Q @ n
        q_perp = np.sqrt(np.maximum(np.sum(Q * Q, axis=-1) - q_par**2, 0.0))
        val = g.mass * disc_amplitude(q_perp * g.radius / HBAR) * sinc(q_par * g.length / (2.0 * HBAR))
        return val.astype(complex)
    if isinstance(g, RigidComposite):
        total = np.zeros(Q.shape[:-1], dtype=complex)
        for body, off in g.parts:
            total += form_factor(body, Q) * np.exp(1j * (Q @ np.asarray(off)) / HBAR)
        return total
    raise TypeError(f"unsupported geometry {type(g).__name__}")


def pair_form_factor(p: GeometryPair, Q) -> tuple[np.ndarray, np.ndarray]:
    """Form factors of both bodies of a pair; the second carries exp(-i Q.R12 / hbar)."""
    Q = _as_q(Q)
    mu1 = form_factor(p.base, Q)
    mu2 = mu1 * np.exp(-1j * (Q @ np.asarray(p.separation)) / HBAR)
    return mu1, mu2


def nucleon_count(g: MassGeometry | GeometryPair) -> float:
    """Total mass over m0 (per body for a pair); not rounded."""
    return g.mass / M0
