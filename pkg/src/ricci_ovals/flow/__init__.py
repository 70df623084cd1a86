from .base_stepper import BaseStepper
from .driver import FlowConfig, Trajectory, convergence_study, run_flow, write_trajectory
from .monitors import FlowMonitors, compute_monitors
from .rescaled import (
    RescaledProfile,
    RescaledStepper,
    as_profile,
    compute_J,
    cylinder_segment,
    rescale,
    rescaled_sphere,
    step_rescaled,
    tip_ode_rhs,
    unrescale,
)
from .tip_chart import TipChart, TipChartStepper, step_tip_chart, stitch_collar, to_tip_chart
from .unrescaled import UnrescaledStepper, extinction_time, step_unrescaled

__all__ = [
    "BaseStepper",
    "FlowConfig",
    "Trajectory",
    "convergence_study",
    "run_flow",
    "write_trajectory",
    "FlowMonitors",
    "compute_monitors",
    "RescaledProfile",
    "RescaledStepper",
    "as_profile",
    "compute_J",
    "cylinder_segment",
    "rescale",
    "rescaled_sphere",
    "step_rescaled",
    "tip_ode_rhs",
    "unrescale",
    "TipChart",
    "TipChartStepper",
    "step_tip_chart",
    "stitch_collar",
    "to_tip_chart",
    "UnrescaledStepper",
    "extinction_time",
    "step_unrescaled",
]
