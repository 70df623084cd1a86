"""Barrier supersolutions Y_a(u) for the tip-chart equation near the cylinder.

The family is built from the Bryant profile,

    Y_a(u) = Z₀(a u/√2) - a⁻² + a⁻⁴ ζ(u),

and is tested against the elliptic part of the Y equation

    Y Y'' - (u/2) Y' - ½ Y'² + (1 - Y) Y'/u + 2 (1 - Y) Y/u² < 0.

Without the a⁻⁴ζ term the curve is a strict subsolution on the whole
window, so the correction is part of the default construction. ζ is the
smooth solution of

    (1/u - u/2) ζ' + 2ζ/u² = -2(4 - u²)/u⁴ - c(u²),   c(x) = x²/4 - 3x/8 + 1/2,

which is regular at u = √2 with ζ(√2) = -7/4.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .bryant import BryantProfile
from .exceptions import BarrierError

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
U_MAX_FACTOR = 9.0 / 8.0
MIN_A = 10.0
RECOMMENDED_A = 20.0
DEFAULT_R_STAR = 2.0
DEFAULT_U_FLOOR = 1.0
DEFAULT_SLACK = 1e-8


def zeta(u):
    """Correction profile ζ(u), written in x = u²."""
    x = np.asarray(u, dtype=float) ** 2
    g = (2.0 - x) / x
    p = -(x**2) / 8.0 - 5.0 * x / 8.0 - 2.0 * np.log(x)
    return g * p - 3.5 / x


def zeta_derivatives(u):
    """Return (ζ', ζ'') with respect to u."""
    u = np.asarray(u, dtype=float)
    x = u**2
    g = (2.0 - x) / x
    dg = -2.0 / x**2
    d2g = 4.0 / x**3
    p = -(x**2) / 8.0 - 5.0 * x / 8.0 - 2.0 * np.log(x)
    dp = -x / 4.0 - 5.0 / 8.0 - 2.0 / x
    d2p = -0.25 + 2.0 / x**2
    z_x = dg * p + g * dp + 3.5 / x**2
    z_xx = d2g * p + 2.0 * dg * dp + g * d2p - 7.0 / x**3
    return 2.0 * u * z_x, 2.0 * z_x + 4.0 * x * z_xx


def elliptic_operator(u, Y, dY, d2Y):
    """Y Y'' - (u/2) Y' - ½ Y'² + (1 - Y) Y'/u + 2 (1 - Y) Y/u²."""
    return Y * d2Y - 0.5 * u * dY - 0.5 * dY**2 + (1.0 - Y) * dY / u + 2.0 * (1.0 - Y) * Y / u**2


@dataclass(frozen=True)
class BarrierCurve:
    """Y_a sampled on [r*/a, (9/8)√2] with analytic first and second derivatives."""

    a: float
    u: np.ndarray
    Ya: np.ndarray
    dYa: np.ndarray
    d2Ya: np.ndarray
    r_star: float = DEFAULT_R_STAR
    with_correction: bool = True

    def __post_init__(self):
        # Y_a dips below zero just outside the cylinder radius through a⁻²(2u⁻² - 1)
        inside = self.u <= SQRT2
        if np.any(self.Ya[inside] <= 0):
            u_bad = float(self.u[inside][np.argmax(self.Ya[inside] <= 0)])
            raise BarrierError(f"barrier is not positive at u={u_bad:.6g}")
        beyond_half = self.u >= 0.5
        if np.any(self.Ya[beyond_half] > 1.0):
            u_bad = float(self.u[beyond_half][np.argmax(self.Ya[beyond_half] > 1.0)])
            raise BarrierError(f"barrier exceeds one at u={u_bad:.6g}")

    @property
    def domain(self) -> Tuple[float, float]:
        return float(self.u[0]), float(self.u[-1])

    def __call__(self, u):
        return np.interp(u, self.u, self.Ya)


def _evaluate(a: float, bryant: BryantProfile, u: np.ndarray, with_correction: bool):
    rho = a * u / SQRT2
    Y = bryant.Z_at(rho) - a**-2
    dY = (a / SQRT2) * bryant.dZ_at(rho)
    d2Y = 0.5 * a**2 * bryant.d2Z_at(rho)
    if with_correction:
        dz, d2z = zeta_derivatives(u)
        Y = Y + a**-4 * zeta(u)
        dY = dY + a**-4 * dz
        d2Y = d2Y + a**-4 * d2z
    return Y, dY, d2Y


def required_rho_max(a: float) -> float:
    return a * U_MAX_FACTOR


def build_barrier(
    a: float,
    bryant: BryantProfile,
    r_star: float = DEFAULT_R_STAR,
    n: int = 2001,
    with_correction: bool = True,
) -> BarrierCurve:
    """Sample Y_a on [r*/a, (9/8)√2].

    Args:
        a: Barrier parameter; at least 10, and 20 or more for the window checks.
        bryant: Solved profile reaching ρ >= (9/8)a.
        r_star: Inner cut-off radius in Bryant units.
        n: Number of samples.
        with_correction: Include the a⁻⁴ζ(u) term.

    Raises:
        BarrierError: When the Bryant grid is too short or a is too small.
    """
    if a < MIN_A:
        raise BarrierError(f"barrier parameter a={a} is below {MIN_A}")
    if a < RECOMMENDED_A:
        logger.warning(f"barrier parameter a={a:.4g} is below {RECOMMENDED_A}; expansions are coarse")
    if bryant.rho_max < required_rho_max(a):
        raise BarrierError(f"Bryant profile reaches rho={bryant.rho_max}, need {required_rho_max(a):.4g} for a={a}")
    u = np.linspace(r_star / a, U_MAX_FACTOR * SQRT2, n)
    Y, dY, d2Y = _evaluate(a, bryant, u, with_correction)
    return BarrierCurve(a=float(a), u=u, Ya=Y, dYa=dY, d2Ya=d2Y, r_star=r_star, with_correction=with_correction)


@dataclass(frozen=True)
class BarrierResidual:
    """Pointwise operator values and the verdict over the inspection window.

    ``verified_from`` is the smallest sampled u such that the residual is
    negative on [verified_from, √2 - η]; it is NaN when the residual is
    non-negative at the right end of the window.
    """

    u: np.ndarray
    residual: np.ndarray
    window: Tuple[float, float]
    sup: float
    negative: bool
    verified_from: float


def inspection_window(b: BarrierCurve, eta: float = 0.1, u_floor: float = DEFAULT_U_FLOOR) -> Tuple[float, float]:
    lo = max(2.0 * SQRT2 * b.r_star / b.a, u_floor)
    hi = SQRT2 - eta
    if lo >= hi:
        raise BarrierError(f"empty inspection window [{lo:.4g}, {hi:.4g}]")
    return lo, hi


def supersolution_residual(b: BarrierCurve, eta: float = 0.1, u_floor: float = DEFAULT_U_FLOOR) -> BarrierResidual:
    """Evaluate the elliptic operator on Y_a and report its sign on the window."""
    residual = elliptic_operator(b.u, b.Ya, b.dYa, b.d2Ya)
    lo, hi = inspection_window(b, eta, u_floor)
    mask = (b.u >= lo) & (b.u <= hi)
    window_values = residual[mask]
    sup = float(np.max(window_values))
    negative = bool(sup < 0)

    u_in = b.u[b.u <= hi]
    r_in = residual[b.u <= hi]
    failing = np.nonzero(r_in >= 0)[0]
    if r_in[-1] >= 0:
        verified_from = float("nan")
    elif failing.size == 0:
        verified_from = float(u_in[0])
    else:
        verified_from = float(u_in[failing[-1] + 1])
    if not negative:
        logger.warning(f"a={b.a:.4g}: residual reaches {sup:.3g} on [{lo:.4g}, {hi:.4g}]; negative from u={verified_from:.4g}")
    return BarrierResidual(u=b.u, residual=residual, window=(lo, hi), sup=sup, negative=negative, verified_from=verified_from)


def leading_term(a: float, u):
    u = np.asarray(u, dtype=float)
    return a**-2 * (2.0 / u**2 - 1.0)


def remainder_constant(b: BarrierCurve, eta: float = 0.1) -> float:
    """max a⁴ |Y_a - a⁻²(2u⁻² - 1)| over [√2 - η, √2 + η]."""
    mask = np.abs(b.u - SQRT2) <= eta
    return float(np.max(np.abs(b.Ya[mask] - leading_term(b.a, b.u[mask]))) * b.a**4)


def lower_bound_margin(b: BarrierCurve, eta: float = 0.1) -> float:
    """min of Y_a - a⁻²(2u⁻² - 1) - a⁻⁴/100 over [√2 - η, √2 + η]; non-negative when the bound holds."""
    mask = np.abs(b.u - SQRT2) <= eta
    margin = b.Ya[mask] - leading_term(b.a, b.u[mask]) - b.a**-4 / 100.0
    return float(np.min(margin))


def barrier_parameter(tau: float, delta: float) -> float:
    """The a with a⁻² = (1 + δ)/(2|τ|)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return math.sqrt(2.0 * abs(tau) / (1.0 + delta))


class PreconditionCheck(NamedTuple):
    holds: bool
    radius_gap: float
    radius_limit: float
    value_limit: float


def comparison_preconditions(u_bar: float, Y_at_u_bar: Optional[float], a: float, at_maximum: bool = False) -> PreconditionCheck:
    """Hypotheses that let a solution be compared with Y_a.

    At a general point: |ū - √2| <= a⁻²/100 and Y(ū) <= a⁻⁴/32. At the
    maximum of the profile only |u - √2| <= a⁻²/200 is required.
    """
    gap = abs(u_bar - SQRT2)
    if at_maximum:
        limit = a**-2 / 200.0
        return PreconditionCheck(holds=gap <= limit, radius_gap=gap, radius_limit=limit, value_limit=float("nan"))
    limit = a**-2 / 100.0
    value_limit = a**-4 / 32.0
    holds = gap <= limit and Y_at_u_bar is not None and Y_at_u_bar <= value_limit
    return PreconditionCheck(holds=bool(holds), radius_gap=gap, radius_limit=limit, value_limit=value_limit)


def barrier_dominates(
    flow_Y: Callable[[np.ndarray], np.ndarray],
    b: BarrierCurve,
    window: Tuple[float, float],
    slack: float = DEFAULT_SLACK,
) -> bool:
    """True iff flow_Y(u) <= Y_a(u) + slack at every barrier sample in the window.

    Raises:
        BarrierError: If the window is not inside the barrier domain.
    """
    lo, hi = window
    u_min, u_max = b.domain
    if lo > hi or lo < u_min or hi > u_max:
        raise BarrierError(f"window [{lo}, {hi}] is not inside the barrier domain [{u_min:.4g}, {u_max:.4g}]")
    mask = (b.u >= lo) & (b.u <= hi)
    u = b.u[mask]
    values = np.broadcast_to(np.asarray(flow_Y(u), dtype=float), u.shape)
    return bool(np.all(values <= b.Ya[mask] + slack))
