"""The Bryant steady soliton with maximal scalar curvature one.

The profile Z₀(ρ) solves

    Z Z'' - ½ Z'² + (1 - Z) Z'/ρ + 2 (1 - Z) Z/ρ² = 0,    Z(0) = 1,

with the expansions Z = 1 + b₀ρ² + (2/5) b₀²ρ⁴ + … near the origin
(b₀ = -1/6) and Z = c₀ρ⁻² + 2c₀²ρ⁻⁴ + 10c₀³ρ⁻⁶ + … at infinity.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .exceptions import GridError, IntegrationError, ProfileBlowUpError

logger = logging.getLogger(__name__)

B0 = -1.0 / 6.0
RHO_LAUNCH = 1e-3
GRID_STEP = 1e-3
LOG_SAMPLES = 20001
TAIL_FRACTION_LIMIT = 0.1
NEAR_FUNCTIONAL_RHO = 0.02


def series_origin(f: float, b0: float = B0) -> float:
    """Fourth-order origin expansion Z(f) = 1 + b₀f² + (2/5)b₀²f⁴."""
    if abs(f) > 0.5:
        raise ValueError("series_origin is only valid for |f| <= 0.5")
    return 1.0 + b0 * f**2 + 0.4 * b0**2 * f**4


def series_origin_slope(f: float, b0: float = B0) -> float:
    return 2.0 * b0 * f + 1.6 * b0**2 * f**3


def soliton_rhs(rho: float, y: np.ndarray) -> np.ndarray:
    """First-order system (Z, Z') of the soliton equation."""
    Z, dZ = y
    d2Z = (0.5 * dZ**2 - (1.0 - Z) * dZ / rho - 2.0 * (1.0 - Z) * Z / rho**2) / Z
    return np.array([dZ, d2Z])


def soliton_second_derivative(rho, Z, dZ):
    rho = np.asarray(rho, dtype=float)
    return (0.5 * dZ**2 - (1.0 - Z) * dZ / rho - 2.0 * (1.0 - Z) * Z / rho**2) / Z


def _leaves_positive(rho, y):
    return y[0]


_leaves_positive.terminal = True
_leaves_positive.direction = -1


def _hermite_dense(rho, Z, dZ):
    spline = CubicHermiteSpline(rho, Z, dZ)
    slope = spline.derivative()
    return lambda r: np.array([spline(r), slope(r)])


@dataclass(frozen=True)
class BryantProfile:
    """Z₀ sampled on a uniform ρ grid starting at ρ = 0.

    ``dZ`` holds Z₀' from the integrator. The dense interpolant of the
    solve is kept for off-grid evaluation; a profile built from arrays
    alone is interpolated with a cubic Hermite spline through (Z, Z').
    """

    rho: np.ndarray
    Z: np.ndarray
    dZ: np.ndarray
    tol: float
    b0: float = B0
    _solution: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not (len(self.rho) == len(self.Z) == len(self.dZ)) or len(self.rho) < 2:
            raise GridError("rho, Z and dZ must be equal-length arrays with at least two samples")
        if np.any(np.diff(self.rho) <= 0):
            raise GridError("rho must be strictly increasing")
        if np.any(self.Z <= 0) or np.any(self.Z > 1.0):
            raise ProfileBlowUpError("Z left the interval (0, 1]", last_rho=float(self.rho[-1]))
        if self._solution is None:
            object.__setattr__(self, "_solution", _hermite_dense(self.rho, self.Z, self.dZ))

    @property
    def rho_max(self) -> float:
        return float(self.rho[-1])

    def _check_range(self, rho: np.ndarray):
        if np.any(rho < 0) or np.any(rho > self.rho_max * (1 + 1e-12)):
            raise GridError(f"rho outside the solved range [0, {self.rho_max}]")

    def Z_at(self, rho):
        """Z₀ at arbitrary ρ in [0, rho_max]."""
        rho = np.asarray(rho, dtype=float)
        self._check_range(rho)
        near = rho < RHO_LAUNCH
        far = np.clip(rho, RHO_LAUNCH, self.rho_max)
        values = np.where(near, 1.0 + self.b0 * rho**2 + 0.4 * self.b0**2 * rho**4, self._solution(far)[0])
        return values if values.ndim else float(values)

    def dZ_at(self, rho):
        rho = np.asarray(rho, dtype=float)
        self._check_range(rho)
        near = rho < RHO_LAUNCH
        far = np.clip(rho, RHO_LAUNCH, self.rho_max)
        values = np.where(near, 2.0 * self.b0 * rho + 1.6 * self.b0**2 * rho**3, self._solution(far)[1])
        return values if values.ndim else float(values)

    def d2Z_at(self, rho):
        """Z₀'' from the soliton equation, with the series value near the origin."""
        rho = np.asarray(rho, dtype=float)
        near = rho < RHO_LAUNCH
        safe = np.where(near, RHO_LAUNCH, rho)
        from_ode = soliton_second_derivative(safe, self.Z_at(safe), self.dZ_at(safe))
        values = np.where(near, 2.0 * self.b0 + 4.8 * self.b0**2 * rho**2, from_ode)
        return values if values.ndim else float(values)

    def arclength_table(self) -> np.ndarray:
        """Distance from the tip, ∫₀^ρ dρ'/√Z₀, on the stored grid."""
        return cumulative_trapezoid(1.0 / np.sqrt(self.Z), self.rho, initial=0.0)

    def arclength(self, rho):
        return np.interp(rho, self.rho, self.arclength_table())

    def rho_at_arclength(self, distance):
        return np.interp(distance, self.arclength_table(), self.rho)

    def measure_c0(self) -> float:
        return measure_c0(self)


def solve_bryant(rho_max: float = 50.0, tol: float = 1e-10) -> BryantProfile:
    """Integrate the soliton equation outward from a series launch.

    Args:
        rho_max: Outer end of the profile, at least 10.
        tol: Relative local error tolerance in (1e-14, 1e-4).

    Returns:
        BryantProfile: Z₀ on the grid ρ = 0, 10⁻³, …, rho_max.

    Raises:
        ValueError: On out-of-range arguments.
        IntegrationError: When the integrator stops early.
        ProfileBlowUpError: When Z reaches 0 or exceeds 1.
    """
    if rho_max < 10:
        raise ValueError("rho_max must be at least 10")
    if not 1e-14 < tol < 1e-4:
        raise ValueError("tol must lie in (1e-14, 1e-4)")
    y0 = [series_origin(RHO_LAUNCH), series_origin_slope(RHO_LAUNCH)]
    sol = solve_ivp(
        soliton_rhs,
        (RHO_LAUNCH, rho_max),
        y0,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-4,
        dense_output=True,
        events=_leaves_positive,
    )
    if sol.status == 1:
        last = float(sol.t_events[0][0])
        raise ProfileBlowUpError(f"Z reached zero at rho={last:.6g}", last_rho=last)
    if sol.status != 0:
        last = float(sol.t[-1])
        raise IntegrationError(f"Bryant integration failed at rho={last:.6g}: {sol.message}", last_rho=last)

    n = int(round((rho_max - 0.0) / GRID_STEP))
    rho = np.linspace(0.0, n * GRID_STEP, n + 1)
    rho[-1] = min(rho[-1], rho_max)
    values = sol.sol(np.clip(rho, RHO_LAUNCH, rho_max))
    Z, dZ = values[0], values[1]
    Z[0], dZ[0] = 1.0, 0.0
    profile = BryantProfile(rho=rho, Z=Z, dZ=dZ, tol=tol, _solution=sol.sol)
    if np.any(dZ[1:] >= 0):
        raise ProfileBlowUpError("Z is not strictly decreasing", last_rho=float(rho[np.argmax(dZ[1:] >= 0) + 1]))
    logger.info(f"Solved Bryant profile to rho={rho_max} ({sol.nfev} evaluations)")
    return profile


def tail_expansion(rho, c0: float = 1.0):
    """Large-ρ expansion c₀ρ⁻² + 2c₀²ρ⁻⁴ + 10c₀³ρ⁻⁶."""
    rho = np.asarray(rho, dtype=float)
    return c0 / rho**2 + 2.0 * c0**2 / rho**4 + 10.0 * c0**3 / rho**6


def measure_c0(b: BryantProfile) -> float:
    """Solve c + 2c²ρ⁻² + 10c³ρ⁻⁴ = ρ²Z at the end of the grid."""
    rho = b.rho_max
    m = rho**2 * float(b.Z[-1])
    c = m
    for _ in range(4):
        c = m - 2.0 * c**2 / rho**2 - 10.0 * c**3 / rho**4
    return float(c)


def c0_integrand(b: BryantProfile, rho):
    """Z₀'/(ρ√Z₀), with the limit 2b₀ at the origin."""
    rho = np.asarray(rho, dtype=float)
    safe = np.where(rho > 0, rho, 1.0)
    values = np.where(rho > 0, b.dZ_at(safe) / (safe * np.sqrt(b.Z_at(safe))), 2.0 * b.b0)
    return values if values.ndim else float(values)


def head_correction(rho0: float, b0: float = B0) -> float:
    return 2.0 * b0 * rho0 + 0.2 * b0**2 * rho0**3


def tail_correction(rho_end: float, c0: float = 1.0) -> float:
    return -np.sqrt(c0) / rho_end**2 - 1.5 * c0**1.5 / rho_end**4


def compute_C0(b: BryantProfile, tail: bool = True, rho_cut: Optional[float] = None) -> float:
    """Integrate Z₀'/(ρ√Z₀) over (0, ∞).

    Composite Simpson on a log-uniform resampling, with the origin series
    supplying the head and the large-ρ expansion the tail.

    Args:
        b: Solved profile, resolved to at least ρ = 30 when the tail is used.
        tail: Add the analytic tail beyond the last point.
        rho_cut: Stop the numerical integral here instead of at rho_max.

    Raises:
        GridError: When the profile is too short or the tail dominates.
    """
    end = b.rho_max if rho_cut is None else float(rho_cut)
    if end > b.rho_max or end <= RHO_LAUNCH:
        raise GridError(f"rho_cut must lie in ({RHO_LAUNCH}, {b.rho_max}]")
    if tail and end < 30:
        raise GridError("tail-corrected C0 requires the integral to reach rho >= 30")
    x = np.linspace(np.log(RHO_LAUNCH), np.log(end), LOG_SAMPLES)
    rho = np.exp(x)
    body = simpson(c0_integrand(b, rho) * rho, x=x)
    total = head_correction(RHO_LAUNCH, b.b0) + body
    if tail:
        correction = tail_correction(end, measure_c0(b))
        total += correction
        if abs(correction) > TAIL_FRACTION_LIMIT * abs(total):
            raise GridError(f"tail correction {correction:.3g} exceeds 10% of the total; extend rho_max")
    return float(total)


def _psi_and_slope(b: BryantProfile):
    psi = np.sqrt(b.Z)
    return psi, b.dZ / (2.0 * psi)


def divergence_functional(b: BryantProfile, rho):
    """Ψ' + (Ψ - Ψ⁻¹)/ρ with Ψ = √Z₀; its limits are 0 at the tip and -1 at infinity."""
    rho = np.asarray(rho, dtype=float)
    psi = np.sqrt(b.Z_at(rho))
    slope = b.dZ_at(rho) / (2.0 * psi)
    return slope + (psi - 1.0 / psi) / rho


def divergence_residual(b: BryantProfile) -> np.ndarray:
    """Pointwise defect of (2/ρ)Ψ' = d/dρ(Ψ' + (Ψ - Ψ⁻¹)/ρ) on the interior grid.

    The derivative on the right is a second-order central difference, so
    the residual is discretization error of order h².
    """
    rho = b.rho[1:]
    psi, slope = _psi_and_slope(b)
    psi, slope = psi[1:], slope[1:]
    flux = slope + (psi - 1.0 / psi) / rho
    residual = 2.0 * slope / rho - np.gradient(flux, rho)
    return residual[1:-1]


class DivergenceLimits(NamedTuple):
    near: float
    near_rho: float
    far: float
    far_rho: float


def divergence_limits(b: BryantProfile, near_rho: float = NEAR_FUNCTIONAL_RHO, far_rho: Optional[float] = None) -> DivergenceLimits:
    """The divergence functional close to both ends of the profile.

    Near the tip the functional behaves like 2b₀ρ, so it is sampled at a
    small ρ; at the far end it behaves like -1 + ρ⁻².
    """
    far_rho = min(30.0, b.rho_max) if far_rho is None else far_rho
    return DivergenceLimits(
        near=float(divergence_functional(b, near_rho)),
        near_rho=near_rho,
        far=float(divergence_functional(b, far_rho)),
        far_rho=far_rho,
    )


class PressureCheck(NamedTuple):
    soliton: np.ndarray
    pressure: np.ndarray
    mismatch: float


def pressure_residual(b: BryantProfile, stride: int = 10) -> PressureCheck:
    """Compare the Ψ-form of the soliton equation with the Z-form divided by 2Ψ³.

    Z'' is taken by finite differences so both residuals are non-trivial;
    the algebraic identity makes them agree to rounding.
    """
    rho = b.rho[1::stride]
    Z = b.Z[1::stride]
    dZ = b.dZ[1::stride]
    d2Z = np.gradient(b.dZ, b.rho)[1::stride]
    soliton = Z * d2Z - 0.5 * dZ**2 + (1.0 - Z) * dZ / rho + 2.0 * (1.0 - Z) * Z / rho**2
    psi = np.sqrt(Z)
    dpsi = dZ / (2.0 * psi)
    d2psi = d2Z / (2.0 * psi) - dZ**2 / (4.0 * psi**3)
    pressure = d2psi + (psi**-2 - 1.0) * dpsi / rho + (1.0 / psi - psi) / rho**2
    scale = np.maximum(1.0, np.abs(soliton / (2.0 * psi**3)))
    mismatch = float(np.max(np.abs(pressure - soliton / (2.0 * psi**3)) / scale))
    return PressureCheck(soliton=soliton, pressure=pressure, mismatch=mismatch)


def constants_report(b: BryantProfile) -> Dict[str, float]:
    return {"C0": compute_C0(b), "c0_measured": measure_c0(b), "b0": b.b0}
