"""Bounded-input true proportional navigation for impact-time control."""

from .engagement import (
    EngagementState, RelativeState, StateDerivative, VehicleState,
    derive_relative_state, engagement_derivatives, wrap_angle,
)
from .guidance import (
    GuidanceDiagnostics, GuidanceParams, Variant, first_order_terms, gain_shaping,
    guidance_command, reaching_times, second_order_terms, sliding_surface, time_to_go,
)
from .saturation import (
    Envelope, SaturationParams, achieved_accel_rate, envelope, saturation_gain,
)
from .sim import RunSpec, SimConfig, SimResult, TrajectoryLog, compute_metrics, run, simulate, step

__all__ = [
    "EngagementState", "Envelope", "GuidanceDiagnostics", "GuidanceParams", "RelativeState",
    "RunSpec", "SaturationParams", "SimConfig", "SimResult", "StateDerivative",
    "TrajectoryLog", "Variant", "VehicleState", "achieved_accel_rate", "compute_metrics",
    "derive_relative_state", "engagement_derivatives", "envelope", "first_order_terms",
    "gain_shaping", "guidance_command", "reaching_times", "run", "saturation_gain",
    "second_order_terms", "simulate", "sliding_surface", "step", "time_to_go", "wrap_angle",
]
