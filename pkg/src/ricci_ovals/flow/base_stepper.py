# src/ricci_ovals/flow/base_stepper.py
import logging
from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from ..exceptions import StabilityError


class BaseStepper(ABC):
    """Base class for all time steppers in the project.

    Subclasses supply the state validation, the stability bound and the
    update itself; ``step`` enforces the contract around them.
    """

    def __init__(self, symmetric: bool = True):
        self.symmetric = symmetric
        self.logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod
    def validate(self, state):
        """Raise if ``state`` cannot be advanced."""
        pass

    @abstractmethod
    def stability_bound(self, state) -> float:
        """Largest admissible time step for ``state``."""
        pass

    @abstractmethod
    def advance(self, state, dt: float):
        """Return the state after one step of size ``dt``."""
        pass

    def step(self, state, dt: float):
        """Validate, check the step size and advance once."""
        self.validate(state)
        bound = self.stability_bound(state)
        if dt <= 0:
            raise StabilityError(f"time step must be positive, got {dt}")
        if dt > bound * (1.0 + 1e-9):
            raise StabilityError(f"time step {dt:.3e} exceeds the stability bound {bound:.3e}")
        new_state = self.advance(state, dt)
        self.logger.debug(f"advanced by {dt:.3e}")
        return new_state

    def run(self, state, dt: float, steps: int, callback: Optional[Callable] = None):
        """Take ``steps`` steps of size ``dt``, calling ``callback(i, state)`` after each."""
        for i in range(steps):
            state = self.step(state, dt)
            if callback is not None:
                callback(i, state)
        return state

    @staticmethod
    def diffuse(f: np.ndarray, dt: float, h: float, closed: bool) -> np.ndarray:
        """Backward-Euler step of f_t = f_xx with the three-point Laplacian.

        Closed profiles hold f = 0 at both ends; open profiles use mirrored
        ghosts (zero slope).
        """
        r = dt / (h * h)
        if closed:
            m = f.size - 2
            ab = np.zeros((3, m))
            ab[0, 1:] = -r
            ab[1, :] = 1.0 + 2.0 * r
            ab[2, :-1] = -r
            out = np.zeros_like(f)
            out[1:-1] = solve_banded((1, 1), ab, f[1:-1])
            return out
        m = f.size
        ab = np.zeros((3, m))
        ab[0, 1:] = -r
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :-1] = -r
        ab[0, 1] = -2.0 * r
        ab[2, -2] = -2.0 * r
        return solve_banded((1, 1), ab, f)

    @staticmethod
    def remap(x: np.ndarray, f: np.ndarray, grid: np.ndarray, closed: bool) -> np.ndarray:
        """Interpolate moved samples back onto a fixed grid with a cubic spline."""
        spline = CubicSpline(x, f, bc_type="natural" if closed else "not-a-knot")
        values = spline(grid)
        if closed:
            values[0] = 0.0
            values[-1] = 0.0
        return values

    @staticmethod
    def symmetrize(f: np.ndarray) -> np.ndarray:
        return 0.5 * (f + f[::-1])
