"""Planar point-mass engagement kinematics.

Cartesian positions plus speed and flight-path angle are the ground truth.
Every LOS-frame quantity (range, LOS angle, lead angles, radial and
tangential relative speed) is derived from them on demand, so the polar
relations hold by construction.

Units are SI throughout; angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import CoLocated, SpeedFloor, ValidationError

TWO_PI = 2.0 * math.pi
COLOCATED_RANGE = 1e-9
V_MIN = 1.0


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(angle, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    speed: float
    gamma: float

    def __post_init__(self):
        if not self.speed >= 0.0:
            raise ValidationError(f"speed must be non-negative, got {self.speed}")
        object.__setattr__(self, "gamma", wrap_angle(self.gamma))

    @property
    def velocity(self) -> tuple[float, float]:
        return self.speed * math.cos(self.gamma), self.speed * math.sin(self.gamma)


class RelativeState(NamedTuple):
    r: float
    theta_los: float
    theta_i: float
    theta_t: float
    v_r: float
    v_theta: float
    theta_dot: float


class EngagementState(NamedTuple):
    interceptor: VehicleState
    target: VehicleState
    a_i: float
    t_el: float = 0.0


class StateDerivative(NamedTuple):
    x_i: float
    y_i: float
    speed_i: float
    gamma_i: float
    x_t: float
    y_t: float
    speed_t: float
    gamma_t: float
    a_i: float
    t_el: float = 1.0


def relative_from_components(x_i, y_i, v_i, gamma_i, x_t, y_t, v_t, gamma_t) -> RelativeState:
    """Scalar form of :func:`derive_relative_state` used by the integrator."""
    dx = x_t - x_i
    dy = y_t - y_i
    r = math.hypot(dx, dy)
    if r < COLOCATED_RANGE:
        raise CoLocated(f"range {r:.3e} m below {COLOCATED_RANGE:.0e} m")
    los = math.atan2(dy, dx)
    theta_i = wrap_angle(gamma_i - los)
    theta_t = wrap_angle(gamma_t - los)
    v_r = v_t * math.cos(theta_t) - v_i * math.cos(theta_i)
    v_theta = v_t * math.sin(theta_t) - v_i * math.sin(theta_i)
    return RelativeState(r, los, theta_i, theta_t, v_r, v_theta, v_theta / r)


def derive_relative_state(interceptor: VehicleState, target: VehicleState) -> RelativeState:
    """LOS-frame relative quantities of a target seen from the interceptor.

    Raises:
        CoLocated: if the two vehicles are closer than 1e-9 m.
    """
    return relative_from_components(
        interceptor.x, interceptor.y, interceptor.speed, interceptor.gamma,
        target.x, target.y, target.speed, target.gamma,
    )


def engagement_derivatives(state: EngagementState, a_i_rate: float, v_min: float = V_MIN) -> StateDerivative:
    """Time derivative of the engagement state.

    ``a_i_rate`` comes from the actuator model and is passed through
    unchanged. The target flies straight at constant speed.
    """
    mi, tg = state.interceptor, state.target
    if mi.speed < v_min:
        raise SpeedFloor(f"interceptor speed {mi.speed:.4g} m/s below floor {v_min} m/s")
    los = math.atan2(tg.y - mi.y, tg.x - mi.x)
    theta_i = mi.gamma - los
    a = state.a_i
    return StateDerivative(
        x_i=mi.speed * math.cos(mi.gamma),
        y_i=mi.speed * math.sin(mi.gamma),
        speed_i=a * math.sin(theta_i),
        gamma_i=a * math.cos(theta_i) / mi.speed,
        x_t=tg.speed * math.cos(tg.gamma),
        y_t=tg.speed * math.sin(tg.gamma),
        speed_t=0.0,
        gamma_t=0.0,
        a_i=a_i_rate,
    )
