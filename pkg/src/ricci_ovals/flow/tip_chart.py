"""The tip chart: Y(u, τ) = u_σ² with the radius as coordinate.

Where the profile is monotone between its maximum and a tip, u can replace σ
as coordinate, which removes the degeneracy of (σ, u) at u = 0. Y obeys

    Y_τ + (u/2) Y_u = Y Y_uu - ½ Y_u² + (1 - Y) Y_u/u + 2 (1 - Y) Y/u²,

and the unrescaled Ȳ(ψ, t) = ψ_s² obeys the same equation without the
(u/2) Y_u term.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from ..differences import uniform_spacing
from ..exceptions import GridError, MonotonicityError
from .base_stepper import BaseStepper
from .rescaled import RescaledProfile

Y_TOLERANCE = 1e-3
MIN_CHART_POINTS = 5


@dataclass(frozen=True)
class TipChart:
    """Y sampled on an increasing u grid starting at the tip u = 0."""

    u_grid: np.ndarray
    Y: np.ndarray
    tau: float
    side: str = "plus"

    def __post_init__(self):
        u = np.array(self.u_grid, dtype=float)
        Y = np.array(self.Y, dtype=float)
        if u.shape != Y.shape or u.size < MIN_CHART_POINTS:
            raise GridError("tip chart needs matching u and Y arrays with at least 5 points")
        if np.any(np.diff(u) <= 0) or u[0] < 0:
            raise MonotonicityError("u must increase from the tip")
        if np.any(Y < -Y_TOLERANCE) or np.any(Y > 1.0 + Y_TOLERANCE):
            raise GridError("Y must lie in [0, 1]")
        object.__setattr__(self, "u_grid", u)
        object.__setattr__(self, "Y", Y)

    @property
    def u_cut(self) -> float:
        return float(self.u_grid[-1])

    def __call__(self, u):
        return CubicSpline(self.u_grid, self.Y)(u)

    def resampled(self, n: int, u_max: Optional[float] = None) -> "TipChart":
        """The chart on a uniform u grid over [0, u_max], by default [0, u_cut]."""
        top = self.u_cut if u_max is None else min(float(u_max), self.u_cut)
        u = np.linspace(0.0, top, n)
        Y = np.clip(self(u), 0.0, 1.0)
        if self.u_grid[0] == 0.0:
            Y[0] = self.Y[0]
        return TipChart(u_grid=u, Y=Y, tau=self.tau, side=self.side)


def to_tip_chart(r: RescaledProfile, side: str = "plus", u_cut: Optional[float] = None) -> TipChart:
    """Reparametrize the tip region by u.

    Walks from the tip towards the centre while u increases, up to u_cut
    (default: the maximum of u). A flat plateau at the cut is dropped.

    Raises:
        MonotonicityError: If u stops increasing before reaching u_cut.
    """
    if side not in ("plus", "minus"):
        raise ValueError(f"Unknown side: {side}")
    u_s, _ = r.derivatives()
    u, slope = (r.u[::-1], -u_s[::-1]) if side == "plus" else (r.u, u_s)
    target = float(np.max(r.u)) if u_cut is None else float(u_cut)
    tol = 1e-12 * max(1.0, target)
    end = 1
    while end < u.size and u[end] > u[end - 1]:
        end += 1
    reached = float(u[end - 1])
    if reached < target - tol:
        raise MonotonicityError(f"u stops increasing at {reached:.6g} before reaching {target:.6g}")
    stop = int(np.searchsorted(u[:end], target - tol, side="left")) + 1
    Y = slope[:stop] ** 2
    return TipChart(u_grid=u[:stop], Y=Y, tau=r.tau, side=side)


def tip_chart_rhs(chart: TipChart, rescaled: bool = True) -> np.ndarray:
    """Right-hand side of the Y equation on a uniform chart; zero at both ends."""
    u = chart.u_grid
    du = uniform_spacing(u)
    Y = chart.Y
    rhs = np.zeros_like(Y)
    Yu = (Y[2:] - Y[:-2]) / (2.0 * du)
    Yuu = (Y[2:] - 2.0 * Y[1:-1] + Y[:-2]) / du**2
    ui, Yi = u[1:-1], Y[1:-1]
    rhs[1:-1] = Yi * Yuu - 0.5 * Yu**2 + (1.0 - Yi) * Yu / ui + 2.0 * (1.0 - Yi) * Yi / ui**2
    if rescaled:
        rhs[1:-1] -= 0.5 * ui * Yu
    return rhs


class TipChartStepper(BaseStepper):
    """Explicit stepper for the Y equation with Y(0) = 1 and the outer value held."""

    def __init__(self, rescaled: bool = True):
        super().__init__(symmetric=False)
        self.rescaled = rescaled

    def validate(self, state: TipChart):
        uniform_spacing(state.u_grid)
        if state.u_grid[0] != 0.0:
            raise GridError("the chart must start at the tip u = 0")

    def stability_bound(self, state: TipChart) -> float:
        return 0.25 * uniform_spacing(state.u_grid) ** 2

    def advance(self, state: TipChart, dtau: float) -> TipChart:
        Y = state.Y + dtau * tip_chart_rhs(state, self.rescaled)
        Y[0] = 1.0
        return TipChart(u_grid=state.u_grid, Y=np.clip(Y, 0.0, 1.0), tau=state.tau + dtau, side=state.side)

    def evolve(self, state: TipChart, dtau: float) -> TipChart:
        """Advance by dtau in as many stable substeps as needed."""
        bound = self.stability_bound(state)
        substeps = max(1, int(np.ceil(dtau / bound)))
        return self.run(state, dtau / substeps, substeps)


def step_tip_chart(chart: TipChart, dtau: float, rescaled: bool = True) -> TipChart:
    return TipChartStepper(rescaled=rescaled).evolve(chart, dtau)


def sigma_from_chart(chart: TipChart, sigma_cut: float) -> np.ndarray:
    """Distance to the cut, σ(u) = σ_cut ± ∫_u^{u_cut} du'/√Y, for every chart node."""
    inv = 1.0 / np.sqrt(np.maximum(chart.Y, 1e-300))
    tail = cumulative_trapezoid(inv[::-1], -chart.u_grid[::-1], initial=0.0)[::-1]
    sign = 1.0 if chart.side == "plus" else -1.0
    return sigma_cut + sign * tail


def stitch_collar(old: RescaledProfile, new: RescaledProfile, dtau: float, collar: float, points: int = 101) -> RescaledProfile:
    """Replace the tip collars of ``new`` by the profiles of the advanced tip charts.

    On each side the collar is where |u_σ| >= collar. The chart of ``old`` is
    advanced by dtau and turned back into (σ, u) pairs that start at the
    collar edge of ``new``; the merged samples are resampled onto a uniform
    grid between the new tips.
    """
    u_s_new, _ = new.derivatives()
    sigma_parts, u_parts = [], []
    keep = np.abs(u_s_new) < collar
    if not np.any(keep):
        raise GridError("the collar covers the whole profile")
    first, last = int(np.argmax(keep)), int(keep.size - 1 - np.argmax(keep[::-1]))
    tips = {}
    for side, edge in (("minus", first), ("plus", last)):
        u_edge = float(new.u[edge])
        chart = to_tip_chart(old, side=side, u_cut=u_edge)
        chart = step_tip_chart(chart.resampled(points, u_max=u_edge), dtau)
        sigma = sigma_from_chart(chart, float(new.sigma[edge]))
        tips[side] = float(sigma[0])
        sigma_parts.append(sigma[:-1])
        u_parts.append(chart.u_grid[:-1])
    sigma_all = np.concatenate([sigma_parts[0], new.sigma[first : last + 1], sigma_parts[1]])
    u_all = np.concatenate([u_parts[0], new.u[first : last + 1], u_parts[1]])
    order = np.argsort(sigma_all)
    sigma_all, u_all = sigma_all[order], u_all[order]
    unique = np.concatenate([[True], np.diff(sigma_all) > 1e-12])
    grid = np.linspace(tips["minus"], tips["plus"], new.sigma.size)
    u = BaseStepper.remap(sigma_all[unique], u_all[unique], grid, closed=True)
    return RescaledProfile(sigma=grid, u=u, tau=new.tau)
