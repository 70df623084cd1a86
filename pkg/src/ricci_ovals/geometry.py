"""Rotationally symmetric metric profiles on S³ and their curvatures.

A profile is the warped product ``g = ds² + ψ(s)² g_can`` sampled on a
uniform arclength grid whose endpoints are the two poles. The two sectional
curvatures are

* ``K0 = -ψ_ss / ψ``        (planes containing the radial direction)
* ``K1 = (1 - ψ_s²) / ψ²``  (planes tangent to the orbit spheres)

with scalar curvature ``R = 4 K0 + 2 K1`` and the scale-invariant ratio
``Q = K0 / K1``.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .differences import (
    even_pole_value,
    first_derivative,
    one_sided_first,
    one_sided_second,
    second_derivative,
    uniform_spacing,
)
from .exceptions import GridError

logger = logging.getLogger(__name__)

MIN_INTERIOR_POINTS = 5
POLE_ATOL = 1e-12


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProfileGrid:
    """Sampled radius ψ(s) at time t, with poles at s[0] and s[-1]."""

    s: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        s = _frozen_array(self.s)
        psi = _frozen_array(self.psi)
        if s.ndim != 1 or psi.shape != s.shape:
            raise GridError("s and psi must be one-dimensional arrays of equal length")
        if s.size < 3:
            raise GridError("a profile needs at least 3 samples")
        if np.any(np.diff(s) <= 0):
            raise GridError("s must be strictly increasing")
        if not np.all(np.isfinite(psi)):
            raise GridError("psi contains non-finite values")
        scale = max(1.0, float(np.max(np.abs(psi))))
        if abs(psi[0]) > POLE_ATOL * scale or abs(psi[-1]) > POLE_ATOL * scale:
            raise GridError("psi must vanish at both poles")
        if np.any(psi[1:-1] <= 0):
            raise GridError("psi must be positive in the interior")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def h(self) -> float:
        return uniform_spacing(self.s)

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    @property
    def psi_max(self) -> float:
        return float(np.max(self.psi))

    @property
    def s_mid(self) -> float:
        return float(0.5 * (self.s[0] + self.s[-1]))


@dataclass(frozen=True)
class CurvatureFields:
    K0: np.ndarray
    K1: np.ndarray
    R: np.ndarray
    Q: np.ndarray


class ClosingResidual(NamedTuple):
    """Closing-condition residuals at the two poles.

    ``r_minus = |ψ_s(s₋) - 1|`` and ``r_plus = |ψ_s(s₊) + 1|``; ``ss_minus``
    and ``ss_plus`` are ``|ψ_ss|`` at the poles, which vanish for a smooth
    metric.
    """

    r_minus: float
    r_plus: float
    ss_minus: float
    ss_plus: float


def _check_resolution(p: ProfileGrid) -> float:
    h = uniform_spacing(p.s)
    if p.s.size - 2 < MIN_INTERIOR_POINTS:
        raise GridError(f"need at least {MIN_INTERIOR_POINTS} interior points, got {p.s.size - 2}")
    return h


def profile_derivatives(p: ProfileGrid):
    """Return (ψ_s, ψ_ss) with odd continuation through both poles."""
    h = _check_resolution(p)
    return first_derivative(p.psi, h), second_derivative(p.psi, h)


def curvatures(p: ProfileGrid) -> CurvatureFields:
    """Compute K0, K1, R and Q on the profile grid.

    Pole values follow the l'Hospital convention ``K1 = K0``, with K0
    extrapolated from the first two interior points as an even function.

    Raises:
        GridError: On non-uniform or under-resolved grids, or non-finite output.
    """
    psi_s, psi_ss = profile_derivatives(p)
    K0 = np.empty_like(p.psi)
    K1 = np.empty_like(p.psi)
    inner = slice(1, -1)
    psi = p.psi[inner]
    K0[inner] = -psi_ss[inner] / psi
    K1[inner] = (1.0 - psi_s[inner] ** 2) / psi**2
    for pole, near, far in ((0, 1, 2), (-1, -2, -3)):
        K0[pole] = even_pole_value(K0[near], K0[far])
        K1[pole] = K0[pole]
    if not (np.all(np.isfinite(K0)) and np.all(np.isfinite(K1))):
        raise GridError("non-finite curvature values")
    R = 4.0 * K0 + 2.0 * K1
    Q = np.full_like(K0, np.nan)
    np.divide(K0, K1, out=Q, where=K1 != 0)
    return CurvatureFields(K0=K0, K1=K1, R=R, Q=Q)


def closing_residual(p: ProfileGrid) -> ClosingResidual:
    """Measure the smoothness conditions ψ_s(s₋) = 1, ψ_s(s₊) = -1, ψ_ss = 0 at poles."""
    h = _check_resolution(p)
    left = p.psi[:6]
    right = p.psi[::-1][:6]
    slope_minus = one_sided_first(left, h)
    slope_plus = -one_sided_first(right, h)
    return ClosingResidual(
        r_minus=abs(slope_minus - 1.0),
        r_plus=abs(slope_plus + 1.0),
        ss_minus=abs(one_sided_second(left, h)),
        ss_plus=abs(one_sided_second(right, h)),
    )


def q_equation_rhs(p: ProfileGrid) -> np.ndarray:
    """Right-hand side of the evolution of Q under the flow.

    Q_t = Q_ss - (2ψ_s/ψ)(1 - 2Q) Q_s + (2(1 - Q)/ψ²)((1 - ψ_s²) Q² + ψ_s² (2Q + 1))

    Pole values are extrapolated as even functions.
    """
    h = _check_resolution(p)
    psi_s, _ = profile_derivatives(p)
    Q = curvatures(p).Q
    Q_s = first_derivative(Q, h, "even", "even")
    Q_ss = second_derivative(Q, h, "even", "even")
    rhs = np.empty_like(Q)
    inner = slice(1, -1)
    psi = p.psi[inner]
    ps, q = psi_s[inner], Q[inner]
    rhs[inner] = (
        Q_ss[inner]
        - (2.0 * ps / psi) * (1.0 - 2.0 * q) * Q_s[inner]
        + (2.0 * (1.0 - q) / psi**2) * ((1.0 - ps**2) * q**2 + ps**2 * (2.0 * q + 1.0))
    )
    rhs[0] = even_pole_value(rhs[1], rhs[2])
    rhs[-1] = even_pole_value(rhs[-2], rhs[-3])
    return rhs


# fixtures


def _grid(length: float, n: int) -> np.ndarray:
    if n < MIN_INTERIOR_POINTS + 2:
        raise ValueError(f"n must be at least {MIN_INTERIOR_POINTS + 2}")
    return np.linspace(0.0, length, n)


def _pinned(psi: np.ndarray) -> np.ndarray:
    psi = np.array(psi, dtype=float)
    psi[0] = 0.0
    psi[-1] = 0.0
    return psi


def _sphere(n: int, r: float = 1.0) -> ProfileGrid:
    s = _grid(np.pi * r, n)
    return ProfileGrid(s=s, psi=_pinned(r * np.sin(s / r)))


def _capsule(n: int, r: float = np.sqrt(2.0), barrel: float = 4.0) -> ProfileGrid:
    cap = 0.5 * np.pi * r
    s = _grid(2.0 * cap + barrel, n)
    dist = np.minimum(s, s[-1] - s)
    psi = np.where(dist < cap, r * np.sin(np.minimum(dist, cap) / r), r)
    return ProfileGrid(s=s, psi=_pinned(psi))


def _flat_cap(n: int, r: float = 1.0, length: float = 4.0) -> ProfileGrid:
    s = _grid(length, n)
    return ProfileGrid(s=s, psi=_pinned(r * np.sin(np.pi * s / length) ** 2))


def dumbbell_parameters(neck: float, bulb: float):
    """Return (R, c) for ψ = R sin(x)√(1 - c sin²x), x = s/R, with the given neck and bulb radii."""
    if not 0 < neck < bulb:
        raise ValueError("dumbbell requires 0 < neck < bulb")
    ratio = neck / bulb
    c = 0.5 * (1.0 + np.sqrt(1.0 - ratio**2))
    R = neck / np.sqrt(1.0 - c)
    return float(R), float(c)


def _dumbbell(n: int, neck: float = 0.5, bulb: float = 2.0) -> ProfileGrid:
    R, c = dumbbell_parameters(neck, bulb)
    s = _grid(np.pi * R, n)
    sin2 = np.sin(s / R) ** 2
    psi = R * np.sin(s / R) * np.sqrt(1.0 - c * sin2)
    return ProfileGrid(s=s, psi=_pinned(psi))


FIXTURES = {
    "sphere": _sphere,
    "capsule": _capsule,
    "cylinder_with_caps": _capsule,
    "flat_cap": _flat_cap,
    "dumbbell": _dumbbell,
}


def fixtures(kind: str, n: int = 1001, **params) -> ProfileGrid:
    """Sample an analytic test profile.

    Args:
        kind: One of ``sphere``, ``capsule`` (alias ``cylinder_with_caps``),
            ``flat_cap`` or ``dumbbell``.
        n: Number of grid points including both poles.
        **params: Positive shape parameters (``r``; ``barrel``; ``length``;
            ``neck`` and ``bulb``).

    Returns:
        ProfileGrid: The sampled profile at t = 0.

    Raises:
        ValueError: For an unknown kind or non-positive parameters.
    """
    if kind not in FIXTURES:
        raise ValueError(f"Unknown fixture kind: {kind}")
    for name, value in params.items():
        if not value > 0:
            raise ValueError(f"fixture parameter {name} must be positive")
    return FIXTURES[kind](int(n), **params)
