"""Geometric monitors recorded along a flow.

All quantities are computed from a closed ProfileGrid. With an extinction
time T the scale λ = √(T - t) turns them into their rescaled counterparts;
without one they are reported in the units of the profile itself, which is
what a rescaled profile viewed through ``as_profile`` needs.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..differences import integral_from, second_derivative
from ..exceptions import GridError
from ..geometry import ProfileGrid, curvatures, q_equation_rhs

logger = logging.getLogger(__name__)

TIP_FLAG_TOLERANCE = 1e-3
K1_MONOTONE_TOLERANCE = 1e-3
Q_BOUND_SLACK = 1e-3


@dataclass(frozen=True)
class FlowMonitors:
    """Monitor values of one snapshot.

    Attributes:
        t: Time of the snapshot (τ for rescaled runs).
        Q_max: Largest K0/K1 on the profile.
        R_max_location: ``"tip"`` when the scalar curvature peaks at a pole.
        psi_max: Largest radius.
        J_at_tip: J(σ₊), scaled by λ when T is known.
        kappa: Scalar curvature at the plus tip, scaled by λ² when T is known.
        diameter: Distance between the poles.
        q_rhs_at_max: Right-hand side of the Q equation where Q is largest.
        k1_monotone: K1 nondecreasing from the radius maximum to the plus tip;
            None when Q_max exceeds one and the statement does not apply.
        concavity: Largest u_σσ in the interior.
    """

    t: float
    Q_max: float
    R_max_location: str
    psi_max: float
    J_at_tip: float
    kappa: float
    diameter: float
    q_rhs_at_max: float
    k1_monotone: Optional[bool]
    concavity: float

    def __post_init__(self):
        if self.R_max_location not in ("tip", "interior"):
            raise ValueError(f"Unknown R_max_location: {self.R_max_location}")
        for name in ("t", "Q_max", "psi_max", "J_at_tip", "kappa", "diameter", "q_rhs_at_max", "concavity"):
            if not math.isfinite(getattr(self, name)):
                raise GridError(f"monitor {name} is not finite")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def r_max_location(R: np.ndarray, tolerance: float = TIP_FLAG_TOLERANCE) -> str:
    pole = max(float(R[0]), float(R[-1]))
    interior = float(np.max(R[1:-1]))
    return "tip" if pole >= interior * (1.0 - tolerance) else "interior"


def k1_monotone(p: ProfileGrid, K1: np.ndarray, tolerance: float = K1_MONOTONE_TOLERANCE) -> bool:
    """K1 is nondecreasing where ψ decreases towards the plus pole.

    K1_s = (2ψ_s/ψ) K1 (Q - 1), so Q <= 1 and ψ_s <= 0 force K1_s >= 0.
    """
    mid = p.s.size // 2
    start = mid + int(np.argmax(p.psi[mid:]))
    steps = np.diff(K1[start:])
    if steps.size == 0:
        return True
    return bool(np.all(steps >= -tolerance * float(np.max(np.abs(K1)))))


def tip_J(p: ProfileGrid, K0: np.ndarray) -> float:
    """2∫ψ_ss/ψ ds from the middle of the profile to the plus pole."""
    anchor = p.s.size // 2
    F = integral_from(p.s, -K0, anchor)
    # the anchor node sits within h/2 of s_mid
    offset = (p.s[anchor] - p.s_mid) * -K0[anchor]
    return float(2.0 * (F[-1] + offset))


def compute_monitors(p: ProfileGrid, T: Optional[float] = None) -> FlowMonitors:
    """Evaluate every monitor on one closed profile.

    Args:
        p: The profile at time ``p.t``.
        T: Extinction time; when given the curvature scale and J are reported
            in rescaled units.
    """
    lam = 1.0
    if T is not None:
        if T <= p.t:
            raise ValueError(f"extinction time {T} must exceed t={p.t}")
        lam = math.sqrt(T - p.t)
    fields = curvatures(p)
    Q = fields.Q
    finite_Q = np.where(np.isfinite(Q), Q, -np.inf)
    at_max = int(np.argmax(finite_Q))
    q_max = float(finite_Q[at_max])
    psi_ss = second_derivative(p.psi, p.h)
    monitors = FlowMonitors(
        t=p.t,
        Q_max=q_max,
        R_max_location=r_max_location(fields.R),
        psi_max=p.psi_max,
        J_at_tip=lam * tip_J(p, fields.K0),
        kappa=lam**2 * float(fields.R[-1]),
        diameter=p.length,
        q_rhs_at_max=float(q_equation_rhs(p)[at_max]),
        k1_monotone=k1_monotone(p, fields.K1) if q_max <= 1.0 + Q_BOUND_SLACK else None,
        concavity=lam * float(np.max(psi_ss[1:-1])),
    )
    logger.debug(f"monitors at t={p.t:.6g}: Q_max={monitors.Q_max:.6f}, R max at {monitors.R_max_location}")
    return monitors
