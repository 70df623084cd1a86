"""Experiment driver: run a fixture forward and record snapshots and monitors."""

import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..exceptions import FlowAbortedError, RicciLabError, SingularityError
from ..geometry import ProfileGrid, curvatures, fixtures
from ..io import write_curvatures, write_json, write_table
from .monitors import FlowMonitors, compute_monitors
from .rescaled import RescaledProfile, RescaledStepper, as_profile, rescale
from .unrescaled import UnrescaledStepper, extinction_time, psi_max_rate_ok, richardson

logger = logging.getLogger(__name__)

Q_SLACK = 1e-3
EXTINCTION_SPACINGS = 10.0
DEFAULT_TIP_COLLAR = 0.9


@dataclass(frozen=True)
class FlowConfig:
    """Parameters of one flow run.

    ``mode="unrescaled"`` evolves ψ(s, t) up to ``t_end`` with steps
    ``dt_factor * h²``; ``mode="rescaled"`` evolves u(σ, τ) from the rescaled
    fixture up to ``tau_end`` with steps of at most ``dtau``; there the tips
    where |u_σ| >= ``tip_collar`` are advanced in the tip chart (0 disables it).
    """

    fixture: str = "sphere"
    n: int = 201
    r: float = 2.0
    neck: float = 1.5
    bulb: float = 2.0
    dt_factor: float = 0.2
    t_end: float = 0.5
    output_every: int = 10
    symmetry: bool = True
    tip_collar: float = DEFAULT_TIP_COLLAR
    max_steps: int = 200000
    mode: str = "unrescaled"
    dtau: float = 1e-3
    tau_end: float = 1.0

    def __post_init__(self):
        if self.mode not in ("unrescaled", "rescaled"):
            raise ValueError(f"Unknown mode: {self.mode}")
        if self.fixture not in ("sphere", "capsule", "dumbbell"):
            raise ValueError(f"Unknown fixture: {self.fixture}")

    @classmethod
    def from_params(cls, params: Mapping[str, Any]) -> "FlowConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in params.items() if k in names})

    def initial_profile(self) -> ProfileGrid:
        if self.fixture == "dumbbell":
            return fixtures("dumbbell", self.n, neck=self.neck, bulb=self.bulb)
        return fixtures(self.fixture, self.n, r=self.r)

    def initial_extinction_guess(self) -> float:
        """Time scale that puts the rescaled fixture near its model solution."""
        if self.fixture == "sphere":
            return self.r**2 / 4.0
        if self.fixture == "capsule":
            return self.r**2 / 2.0
        return self.neck**2 / 2.0


@dataclass
class Trajectory:
    """Snapshots and monitors of a finished (or stopped) run."""

    config: FlowConfig
    snapshots: List[RescaledProfile] = field(default_factory=list)
    profiles: List[ProfileGrid] = field(default_factory=list)
    monitors: List[FlowMonitors] = field(default_factory=list)
    q_max_history: List[float] = field(default_factory=list)
    psi_rate_ok: bool = True
    T: Optional[float] = None
    termination: str = "running"
    steps: int = 0

    @property
    def q_max(self) -> float:
        return max(self.q_max_history) if self.q_max_history else float("nan")

    def checks(self) -> Dict[str, bool]:
        """Pass/fail of the monitor invariants that apply to this run."""
        result = {"q_max_bounded": bool(self.q_max <= 1.0 + Q_SLACK)}
        if self.config.mode == "unrescaled":
            result["psi_max_rate"] = self.psi_rate_ok
        if self.config.fixture == "dumbbell":
            result["r_max_at_tips"] = all(m.R_max_location == "tip" for m in self.monitors)
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.config.mode,
            "fixture": self.config.fixture,
            "termination": self.termination,
            "steps": self.steps,
            "T": self.T,
            "q_max": self.q_max,
            "psi_rate_ok": self.psi_rate_ok,
            "checks": self.checks(),
            "monitors": [m.to_dict() for m in self.monitors],
        }


def waist(p: ProfileGrid) -> float:
    """Smallest radius between the outermost interior local maxima, or ψ_max without a neck."""
    psi = p.psi
    peaks = np.flatnonzero((psi[1:-1] > psi[:-2]) & (psi[1:-1] >= psi[2:])) + 1
    if peaks.size < 2:
        return p.psi_max
    return float(np.min(psi[peaks[0] : peaks[-1] + 1]))


def _q_max(p: ProfileGrid) -> float:
    return float(np.nanmax(curvatures(p).Q))


def _run_unrescaled(cfg: FlowConfig, traj: Trajectory) -> None:
    stepper = UnrescaledStepper(symmetric=cfg.symmetry)
    p = cfg.initial_profile()
    floor = EXTINCTION_SPACINGS * p.h
    traj.profiles.append(p)
    traj.q_max_history.append(_q_max(p))
    times, maxima = [p.t], [p.psi_max]
    death = None
    try:
        while traj.steps < cfg.max_steps:
            if p.t >= cfg.t_end - 1e-15:
                traj.termination = "t_end"
                break
            if waist(p) < floor or p.psi_max < floor:
                traj.termination = "extinction"
                logger.info(f"profile reached {EXTINCTION_SPACINGS:g} grid spacings at t={p.t:.6g}")
                break
            dt = min(cfg.dt_factor * p.h**2, stepper.stability_bound(p), cfg.t_end - p.t)
            nxt = stepper.step(p, dt)
            if not psi_max_rate_ok(p, nxt):
                traj.psi_rate_ok = False
                logger.warning(f"psi_max decreased too slowly at t={nxt.t:.6g}")
            p = nxt
            traj.steps += 1
            traj.q_max_history.append(_q_max(p))
            times.append(p.t)
            maxima.append(p.psi_max)
            if traj.steps % cfg.output_every == 0:
                traj.profiles.append(p)
        else:
            traj.termination = "max_steps"
    except SingularityError as e:
        traj.termination = "singularity"
        death = e.time_of_death
    except RicciLabError as e:
        traj.termination = "aborted"
        traj.profiles.append(p)
        raise FlowAbortedError(f"flow stopped at t={p.t:.6g}: {e}", traj) from e
    if traj.profiles[-1] is not p:
        traj.profiles.append(p)

    if death is not None:
        traj.T = death
    else:
        try:
            traj.T = extinction_time(times, maxima)
        except ValueError as e:
            logger.warning(f"no extinction time: {e}")
    for q in traj.profiles:
        T = traj.T if traj.T is not None and traj.T > q.t else None
        traj.monitors.append(compute_monitors(q, T))
        if T is not None:
            traj.snapshots.append(rescale(q, T))


def _run_rescaled(cfg: FlowConfig, traj: Trajectory) -> None:
    stepper = RescaledStepper(symmetric=cfg.symmetry, tip_collar=cfg.tip_collar)
    r = rescale(cfg.initial_profile(), cfg.initial_extinction_guess())
    if r.tau >= cfg.tau_end:
        raise ValueError(f"tau_end={cfg.tau_end} must exceed the initial tau={r.tau:.6g}")
    traj.snapshots.append(r)
    traj.q_max_history.append(_q_max(as_profile(r)))
    try:
        while traj.steps < cfg.max_steps:
            if r.tau >= cfg.tau_end - 1e-15:
                traj.termination = "tau_end"
                break
            dtau = min(cfg.dtau, stepper.stability_bound(r), cfg.tau_end - r.tau)
            r = stepper.step(r, dtau)
            traj.steps += 1
            traj.q_max_history.append(_q_max(as_profile(r)))
            if traj.steps % cfg.output_every == 0:
                traj.snapshots.append(r)
        else:
            traj.termination = "max_steps"
    except RicciLabError as e:
        traj.termination = "aborted"
        traj.snapshots.append(r)
        raise FlowAbortedError(f"rescaled flow stopped at tau={r.tau:.6g}: {e}", traj) from e
    if traj.snapshots[-1] is not r:
        traj.snapshots.append(r)
    traj.monitors = [compute_monitors(as_profile(s)) for s in traj.snapshots]


def run_flow(config: FlowConfig, output_dir: Optional[str] = None) -> Trajectory:
    """Run one fixture forward and optionally write its trajectory files.

    Returns:
        Trajectory: Snapshots, monitors and the per-step Q maximum.

    Raises:
        FlowAbortedError: On a step error; the partial trajectory is attached.
    """
    traj = Trajectory(config=config)
    logger.info(f"Starting {config.mode} flow of the {config.fixture} fixture with n={config.n}")
    if config.mode == "unrescaled":
        _run_unrescaled(config, traj)
    else:
        _run_rescaled(config, traj)
    logger.info(f"Flow finished after {traj.steps} steps ({traj.termination}), Q_max={traj.q_max:.6f}")
    if output_dir:
        write_trajectory(traj, output_dir)
    return traj


def write_trajectory(traj: Trajectory, output_dir: str) -> List[str]:
    """Snapshot ``sigma,u`` CSVs, curvature ``s,K0,K1,R,Q`` CSVs and ``monitors.json``."""
    paths = []
    for i, snap in enumerate(traj.snapshots):
        path = os.path.join(output_dir, f"snapshot_{i:05d}.csv")
        paths.append(write_table(path, {"sigma": snap.sigma, "u": snap.u}))
    recorded = traj.profiles or [as_profile(s) for s in traj.snapshots]
    for i, p in enumerate(recorded):
        path = os.path.join(output_dir, f"curvatures_{i:05d}.csv")
        paths.append(write_curvatures(path, p, curvatures(p)))
    paths.append(write_json(os.path.join(output_dir, "monitors.json"), traj.to_dict(), asdict(traj.config)))
    return paths


def convergence_study(
    config: FlowConfig,
    resolutions: Sequence[int],
    exact: Optional[float] = None,
    map_fn: Callable = map,
) -> Dict[str, Any]:
    """Extinction time at several resolutions, its observed order and extrapolation.

    The resolutions should double the number of cells, n = 2^k m + 1.
    """
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least three resolutions")
    trajectories = list(map_fn(lambda n: run_flow(replace(config, n=int(n))), resolutions))
    times = []
    for n, traj in zip(resolutions, trajectories):
        if traj.T is None:
            raise FlowAbortedError(f"no extinction time at n={n}", traj)
        times.append(traj.T)
    d1, d2 = abs(times[-3] - times[-2]), abs(times[-2] - times[-1])
    order = math.log2(d1 / d2) if d2 > 0 and d1 > 0 else float("nan")
    report = {
        "resolutions": list(resolutions),
        "extinction_times": times,
        "observed_order": order,
        "richardson": richardson(times[-2], times[-1]),
    }
    if exact is not None:
        report["errors"] = [abs(T - exact) for T in times]
    logger.info(f"Extinction time converges with observed order {order:.3f}")
    return report
