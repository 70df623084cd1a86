"""Rescaled flow u(σ, τ) with the nonlocal term J.

With u = ψ/√(T - t), σ = (s - s_mid)/√(T - t) and τ = -log(T - t),

    u_τ = u_σσ - (σ/2 + J) u_σ + (u_σ² - 1)/u + u/2,   J(σ) = 2 ∫₀^σ u_σσ/u dσ'.

Along the characteristics dσ/dτ = σ/2 + J the transport term drops out,
which is how the stepper moves its nodes. Closed profiles end at two tips
where u = 0, so the tip positions obey the same ODE σ' = σ/2 + J(σ).
Open profiles are cylinder segments with zero-slope ends on a fixed grid.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..differences import (
    even_pole_value,
    first_derivative,
    integral_from,
    second_derivative,
    uniform_spacing,
)
from ..exceptions import GridError, SingularityError, TipSlopeError
from ..geometry import ProfileGrid
from .base_stepper import BaseStepper

TIP_SLOPE_TOLERANCE = 0.05
OVERFLOW_GUARD = 1e6


@dataclass(frozen=True)
class RescaledProfile:
    """Sampled u(σ) at rescaled time τ on a uniform σ grid.

    For closed profiles u vanishes at both ends, which are the tips
    σ₋(τ) and σ₊(τ). Open profiles have no tips and ``sigma_tips`` is None.
    """

    sigma: np.ndarray
    u: np.ndarray
    tau: float
    closed: bool = True

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        u = np.array(self.u, dtype=float)
        if sigma.ndim != 1 or u.shape != sigma.shape or sigma.size < 7:
            raise GridError("sigma and u must be equal-length arrays with at least 7 samples")
        uniform_spacing(sigma)
        if not np.all(np.isfinite(u)):
            raise GridError("u contains non-finite values")
        if self.closed:
            scale = max(1.0, float(np.max(np.abs(u))))
            if abs(u[0]) > 1e-12 * scale or abs(u[-1]) > 1e-12 * scale:
                raise GridError("a closed profile must vanish at both tips")
            if np.any(u[1:-1] <= 0):
                raise GridError("u must be positive between the tips")
        elif np.any(u <= 0):
            raise GridError("u must be positive on an open profile")
        sigma.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def h(self) -> float:
        return uniform_spacing(self.sigma)

    @property
    def sigma_tips(self) -> Optional[Tuple[float, float]]:
        if not self.closed:
            return None
        return float(self.sigma[0]), float(self.sigma[-1])

    @property
    def parity(self) -> str:
        return "odd" if self.closed else "even"

    def derivatives(self):
        h = self.h
        return (
            first_derivative(self.u, h, self.parity, self.parity),
            second_derivative(self.u, h, self.parity, self.parity),
        )

    def max_slope(self) -> float:
        return float(np.max(np.abs(self.derivatives()[0])))

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.u - self.u[::-1])))


def as_profile(r: RescaledProfile) -> ProfileGrid:
    """View a closed rescaled profile as a ProfileGrid (s = σ - σ₋, ψ = u, t = τ)."""
    if not r.closed:
        raise GridError("only closed profiles have a ProfileGrid view")
    return ProfileGrid(s=r.sigma - r.sigma[0], psi=r.u, t=r.tau)


def rescale(p: ProfileGrid, T: float) -> RescaledProfile:
    """Map ψ(s, t) to u(σ, τ) for an extinction time T > t."""
    if T <= p.t:
        raise ValueError(f"extinction time {T} must exceed t={p.t}")
    lam = math.sqrt(T - p.t)
    return RescaledProfile(sigma=(p.s - p.s_mid) / lam, u=p.psi / lam, tau=-math.log(T - p.t))


def unrescale(r: RescaledProfile, T: float) -> ProfileGrid:
    lam = math.exp(-0.5 * r.tau)
    return ProfileGrid(s=(r.sigma - r.sigma[0]) * lam, psi=r.u * lam, t=T - math.exp(-r.tau))


def _centre_index(sigma: np.ndarray) -> int:
    return int(np.argmin(np.abs(sigma)))


def J_integrand(r: RescaledProfile) -> np.ndarray:
    """u_σσ/u, with the tip values taken as even limits of their neighbours."""
    _, u_ss = r.derivatives()
    g = np.empty_like(r.u)
    if r.closed:
        g[1:-1] = u_ss[1:-1] / r.u[1:-1]
        g[0] = even_pole_value(g[1], g[2])
        g[-1] = even_pole_value(g[-2], g[-3])
    else:
        g[:] = u_ss / r.u
    if np.max(np.abs(g)) * r.h > OVERFLOW_GUARD:
        raise GridError("u_ss/u is not integrable at this resolution")
    return g


def J_field(r: RescaledProfile) -> np.ndarray:
    """J(σ) = 2∫₀^σ u_σσ/u dσ' at every node, by the trapezoid rule from σ = 0."""
    g = J_integrand(r)
    anchor = _centre_index(r.sigma)
    return 2.0 * (integral_from(r.sigma, g, anchor) + r.sigma[anchor] * g[anchor])


def compute_J(r: RescaledProfile, sigma: float) -> float:
    """J at a single point inside the profile."""
    lo, hi = float(r.sigma[0]), float(r.sigma[-1])
    if not lo - 1e-12 <= sigma <= hi + 1e-12:
        raise GridError(f"sigma={sigma} is outside [{lo}, {hi}]")
    return float(np.interp(sigma, r.sigma, J_field(r)))


def tip_slope(r: RescaledProfile, side: str = "plus") -> float:
    u_s, _ = r.derivatives()
    return float(u_s[-1] if side == "plus" else u_s[0])


def tip_ode_rhs(r: RescaledProfile, side: str = "plus") -> float:
    """σ'(τ) = σ/2 + J(σ) evaluated at one tip.

    Raises:
        TipSlopeError: If |u_σ| at the tip differs from 1 by more than 0.05.
    """
    if not r.closed:
        raise GridError("open profiles have no tips")
    slope = tip_slope(r, side)
    target = -1.0 if side == "plus" else 1.0
    if abs(slope - target) > TIP_SLOPE_TOLERANCE:
        raise TipSlopeError(f"tip slope {slope:.4f} on the {side} side is not {target:+.0f}")
    index = -1 if side == "plus" else 0
    return float(0.5 * r.sigma[index] + J_field(r)[index])


def orbital_term(r: RescaledProfile, u_s: np.ndarray) -> np.ndarray:
    """(u_σ² - 1)/u, which tends to zero at a closed tip."""
    out = np.zeros_like(r.u)
    if r.closed:
        out[1:-1] = (u_s[1:-1] ** 2 - 1.0) / r.u[1:-1]
    else:
        out[:] = (u_s**2 - 1.0) / r.u
    return out


class RescaledStepper(BaseStepper):
    """Material-point stepper for the rescaled equation.

    Diffusion is implicit, the reaction (u_σ² - 1)/u + u/2 is explicit and J
    is frozen at the start of the step.

    Args:
        symmetric: Mirror-average after each step.
        tip_collar: When positive, values where |u_σ| >= tip_collar are
            replaced by the profile reconstructed from the advanced tip chart.
    """

    def __init__(self, symmetric: bool = True, tip_collar: float = 0.0):
        super().__init__(symmetric=symmetric)
        self.tip_collar = tip_collar

    def validate(self, state: RescaledProfile):
        if state.closed:
            for side in ("minus", "plus"):
                slope = abs(tip_slope(state, side))
                if abs(slope - 1.0) > TIP_SLOPE_TOLERANCE:
                    raise TipSlopeError(f"tip slope {slope:.4f} on the {side} side is not 1")

    def stability_bound(self, state: RescaledProfile) -> float:
        h = state.h
        inner = state.u[1:-1] if state.closed else state.u
        return 0.5 * h * min(h, float(np.min(inner)))

    def advance(self, state: RescaledProfile, dtau: float) -> RescaledProfile:
        h = state.h
        u_s, _ = state.derivatives()
        J = J_field(state)
        reaction = orbital_term(state, u_s) + 0.5 * state.u
        u_new = self.diffuse(state.u + dtau * reaction, dtau, h, closed=state.closed)
        interior = u_new[1:-1] if state.closed else u_new
        if np.min(interior) <= 0:
            raise SingularityError(f"u vanishes inside the profile at tau={state.tau:.6g}", math.inf, state)

        moved = state.sigma + dtau * (0.5 * state.sigma + J)
        if np.any(np.diff(moved) <= 0):
            raise GridError("nodes crossed during the step; reduce dtau")
        if state.closed:
            grid = np.linspace(moved[0], moved[-1], state.sigma.size)
            if self.symmetric:
                half = 0.5 * (moved[-1] - moved[0])
                grid = np.linspace(-half, half, state.sigma.size)
        else:
            grid = state.sigma
        u = self.remap(moved, u_new, grid, closed=state.closed)
        if self.symmetric:
            u = self.symmetrize(u)
        new_state = RescaledProfile(sigma=grid, u=u, tau=state.tau + dtau, closed=state.closed)
        if state.closed and self.tip_collar > 0:
            from .tip_chart import stitch_collar

            new_state = stitch_collar(state, new_state, dtau, self.tip_collar)
        return new_state


def step_rescaled(r: RescaledProfile, dtau: float, symmetric: bool = True, tip_collar: float = 0.0) -> RescaledProfile:
    """Advance u by one step of size dtau."""
    return RescaledStepper(symmetric=symmetric, tip_collar=tip_collar).step(r, dtau)


def cylinder_segment(n: int = 241, half_width: float = 12.0, tau: float = 0.0) -> RescaledProfile:
    """The shrinking cylinder u ≡ √2 on |σ| <= half_width."""
    sigma = np.linspace(-half_width, half_width, n)
    return RescaledProfile(sigma=sigma, u=np.full(n, math.sqrt(2.0)), tau=tau, closed=False)


def rescaled_sphere(n: int = 201, tau: float = 0.0) -> RescaledProfile:
    """The stationary sphere u = 2 cos(σ/2) on [-π, π]."""
    sigma = np.linspace(-math.pi, math.pi, n)
    u = 2.0 * np.cos(0.5 * sigma)
    u[0] = u[-1] = 0.0
    return RescaledProfile(sigma=sigma, u=u, tau=tau)
