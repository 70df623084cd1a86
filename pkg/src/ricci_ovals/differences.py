"""Finite-difference stencils, ghost extensions and small quadrature helpers.

All stencils act on uniformly spaced samples. Boundary behaviour is selected
by a parity flag per end:

* ``"odd"``  reflects the samples through the endpoint value, so a function
  vanishing at a pole continues as an odd function (ψ at a closed tip).
* ``"even"`` mirrors the samples, which imposes a zero slope (Q at a pole,
  or the open ends of a cylinder segment).
"""

import logging
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import GridError

logger = logging.getLogger(__name__)

PARITIES = ("odd", "even")
GHOSTS = 2


def uniform_spacing(x: np.ndarray, rtol: float = 1e-8) -> float:
    """Return the spacing of a uniform grid.

    Raises:
        GridError: If ``x`` is not strictly increasing with constant spacing.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise GridError("grid must be one-dimensional with at least 3 points")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise GridError("grid must be strictly increasing")
    h = (x[-1] - x[0]) / (x.size - 1)
    if np.max(np.abs(dx - h)) > rtol * max(h, 1e-300) + 1e-12 * np.max(np.abs(x)):
        raise GridError("grid spacing is not uniform")
    return float(h)


def _ghosts(f: np.ndarray, parity: str, at_start: bool) -> np.ndarray:
    if parity not in PARITIES:
        raise ValueError(f"Unknown parity: {parity}")
    if at_start:
        edge, inner = f[0], f[1 : GHOSTS + 1][::-1]
    else:
        edge, inner = f[-1], f[-GHOSTS - 1 : -1][::-1]
    if parity == "even":
        return inner
    return 2.0 * edge - inner


def extend(f: np.ndarray, left: str = "odd", right: str = "odd") -> np.ndarray:
    """Pad ``f`` with two ghost values on each side."""
    f = np.asarray(f, dtype=float)
    return np.concatenate([_ghosts(f, left, True), f, _ghosts(f, right, False)])


def first_derivative(f: np.ndarray, h: float, left: str = "odd", right: str = "odd") -> np.ndarray:
    """Fourth-order centered first derivative."""
    g = extend(f, left, right)
    return (-g[4:] + 8.0 * g[3:-1] - 8.0 * g[1:-3] + g[:-4]) / (12.0 * h)


def second_derivative(f: np.ndarray, h: float, left: str = "odd", right: str = "odd") -> np.ndarray:
    """Fourth-order centered second derivative."""
    g = extend(f, left, right)
    return (-g[4:] + 16.0 * g[3:-1] - 30.0 * g[2:-2] + 16.0 * g[1:-3] - g[:-4]) / (12.0 * h * h)


def one_sided_first(f: np.ndarray, h: float) -> float:
    """Fourth-order forward difference for f'(x0) from the first five samples."""
    f = np.asarray(f, dtype=float)
    return float((-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h))


def one_sided_second(f: np.ndarray, h: float) -> float:
    """Fourth-order forward difference for f''(x0) from the first six samples."""
    f = np.asarray(f, dtype=float)
    num = 45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]
    return float(num / (12.0 * h * h))


def even_pole_value(f1: float, f2: float) -> float:
    """Extrapolate an even function to its centre from f(h) and f(2h)."""
    return (4.0 * f1 - f2) / 3.0


def integral_from(x: np.ndarray, f: np.ndarray, anchor: int) -> np.ndarray:
    """Cumulative trapezoid integral of ``f`` that vanishes at index ``anchor``."""
    F = cumulative_trapezoid(f, x, initial=0.0)
    return F - F[anchor]


def fitted_exponent(scales, values) -> float:
    """Decay exponent p of ``values ~ scales**(-p)`` from a log-log least-squares fit."""
    scales = np.abs(np.asarray(scales, dtype=float))
    values = np.abs(np.asarray(values, dtype=float))
    if scales.size < 2:
        raise ValueError("at least two samples are needed to fit an exponent")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise ValueError("exponent fits need finite nonzero samples")
    if np.any(scales <= 0):
        raise ValueError("exponent fits need nonzero scales")
    slope, _ = np.polyfit(np.log(scales), np.log(values), 1)
    return float(-slope)


def sup_norm(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values))) if values.size else 0.0


def bracket(x: np.ndarray, lo: float, hi: float) -> Tuple[int, int]:
    """Index range [i, j) of grid points with lo <= x <= hi."""
    i = int(np.searchsorted(x, lo, side="left"))
    j = int(np.searchsorted(x, hi, side="right"))
    return i, j
