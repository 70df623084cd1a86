"""Forward flow of the radius ψ(s, t).

Along material points the radius obeys ψ_t = ψ_ss - (1 - ψ_s²)/ψ while
arclength stretches as ∂_t ds = 2(ψ_ss/ψ) ds = -2K0 ds. One step treats the
diffusion implicitly and the reaction -ψK1 explicitly, moves the cells by the
stretching factor and resamples onto a uniform arclength grid.
"""

import numpy as np

from ..exceptions import GridError, SingularityError
from ..geometry import ProfileGrid, closing_residual, curvatures
from .base_stepper import BaseStepper

CLOSING_TOLERANCE = 1e-2


class UnrescaledStepper(BaseStepper):
    """Implicit-explicit stepper for the unrescaled radius."""

    def validate(self, state: ProfileGrid):
        residual = closing_residual(state)
        if max(residual.r_minus, residual.r_plus) > CLOSING_TOLERANCE:
            raise GridError(
                f"closing residuals ({residual.r_minus:.3g}, {residual.r_plus:.3g}) exceed {CLOSING_TOLERANCE}"
            )

    def stability_bound(self, state: ProfileGrid) -> float:
        h = state.h
        return 0.5 * h * min(h, float(np.min(state.psi[1:-1])))

    def advance(self, state: ProfileGrid, dt: float) -> ProfileGrid:
        h = state.h
        fields = curvatures(state)
        reaction = -state.psi * fields.K1
        reaction[0] = reaction[-1] = 0.0
        psi_new = self.diffuse(state.psi + dt * reaction, dt, h, closed=True)

        interior_min = float(np.min(psi_new[1:-1]))
        if interior_min <= 0:
            old_min = float(np.min(state.psi[1:-1]))
            fraction = old_min / (old_min - interior_min)
            death = state.t + dt * fraction
            self.logger.warning(f"profile pinches at t~{death:.6g}")
            raise SingularityError(f"radius vanishes within the step at t={state.t:.6g}", death, state)

        K0_mid = 0.5 * (fields.K0[1:] + fields.K0[:-1])
        cells = np.diff(state.s) * np.exp(-2.0 * dt * K0_mid)
        s_moved = np.concatenate([[0.0], np.cumsum(cells)])
        grid = np.linspace(0.0, s_moved[-1], state.s.size)
        psi = self.remap(s_moved, psi_new, grid, closed=True)
        if self.symmetric:
            psi = self.symmetrize(psi)
        return ProfileGrid(s=grid, psi=psi, t=state.t + dt)


def step_unrescaled(p: ProfileGrid, dt: float, symmetric: bool = False) -> ProfileGrid:
    """Advance ψ by one step of size dt.

    Raises:
        StabilityError: If dt exceeds the stability bound.
        SingularityError: If the interior radius would cross zero.
        GridError: If the closing residual of ``p`` exceeds 1e-2.
    """
    return UnrescaledStepper(symmetric=symmetric).step(p, dt)


def psi_max_rate_ok(before: ProfileGrid, after: ProfileGrid, tolerance: float = 1e-2) -> bool:
    """Maximum principle for the radius: d(ψ_max)/dt <= -1/ψ_max."""
    dt = after.t - before.t
    rate = (after.psi_max - before.psi_max) / dt
    return rate <= -1.0 / before.psi_max + tolerance


def extinction_time(times, psi_max, samples: int = 5) -> float:
    """Linear extrapolation of ψ_max² to zero over the last samples."""
    times = np.asarray(times, dtype=float)[-samples:]
    squares = np.asarray(psi_max, dtype=float)[-samples:] ** 2
    if times.size < 2:
        raise ValueError("at least two samples are needed to estimate the extinction time")
    slope, intercept = np.polyfit(times, squares, 1)
    if slope >= 0:
        raise ValueError("psi_max is not decreasing; no extinction time")
    return float(-intercept / slope)


def richardson(coarse: float, fine: float, order: int = 2) -> float:
    """Richardson extrapolation of two estimates from grids differing by a factor two."""
    factor = 2.0**order
    return (factor * fine - coarse) / (factor - 1.0)
