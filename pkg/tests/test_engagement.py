import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tpng_impact import (
    EngagementState, VehicleState, derive_relative_state, engagement_derivatives, wrap_angle,
)
from tpng_impact.errors import CoLocated, SpeedFloor, ValidationError

from _support import single_run

finite_angle = st.floats(min_value=-1e4, max_value=1e4, allow_nan=False)


def launch():
    return (VehicleState(0.0, 0.0, 70.0, math.radians(15)),
            VehicleState(5000.0, 0.0, 50.0, math.radians(120)))


@given(finite_angle)
def test_wrap_angle_range_and_trig_identity(x):
    w = wrap_angle(x)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(x), abs=1e-9)
    assert math.sin(w) == pytest.approx(math.sin(x), abs=1e-9)


def test_wrap_angle_pi_maps_to_pi():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi


def test_vehicle_state_validation():
    with pytest.raises(ValidationError):
        VehicleState(0, 0, -1.0, 0)
    assert VehicleState(0, 0, 1, 3 * math.pi).gamma == pytest.approx(math.pi)


def test_launch_relative_state_matches_oracle():
    # frozen values from an mpmath vector-kinematics oracle
    rel = derive_relative_state(*launch())
    assert rel.v_r == pytest.approx(-92.6148078402348, rel=1e-12)
    assert rel.v_theta == pytest.approx(25.1839370320455, rel=1e-12)
    assert rel.r == 5000.0
    assert rel.theta_los == 0.0
    assert rel.theta_dot * rel.r == pytest.approx(rel.v_theta, rel=1e-15)


def test_equal_velocities_give_zero_relative_motion():
    g = 0.3
    rel = derive_relative_state(VehicleState(0, 0, 60, g),
                                VehicleState(1000 * math.cos(g), 1000 * math.sin(g), 60, g))
    assert rel.v_r == pytest.approx(0.0, abs=1e-12)
    assert rel.v_theta == pytest.approx(0.0, abs=1e-12)


def test_stationary_target_pure_pursuit():
    rel = derive_relative_state(VehicleState(0, 0, 70, 0.0), VehicleState(1000, 0, 0, 0.0))
    assert rel.v_r == -70.0
    assert rel.v_theta == pytest.approx(0.0, abs=1e-15)


def test_colocated_raises():
    with pytest.raises(CoLocated):
        derive_relative_state(VehicleState(1, 1, 70, 0), VehicleState(1, 1, 50, 0))


@settings(max_examples=200)
@given(st.floats(-5e3, 5e3), st.floats(-5e3, 5e3), st.floats(0, 300), st.floats(-4, 4),
       st.floats(0, 300), st.floats(-4, 4))
def test_relative_state_invariants(x, y, vi, gi, vt, gt):
    if math.hypot(x, y) < 1.0:
        return
    rel = derive_relative_state(VehicleState(0, 0, vi, gi), VehicleState(x, y, vt, gt))
    assert rel.r > 0
    # projection of the Cartesian relative velocity onto LOS and its normal
    dv = np.array([vt * math.cos(gt) - vi * math.cos(gi), vt * math.sin(gt) - vi * math.sin(gi)])
    u = np.array([x, y]) / math.hypot(x, y)
    n = np.array([-u[1], u[0]])
    assert rel.v_r == pytest.approx(dv @ u, abs=1e-9 * (1 + vi + vt))
    assert rel.v_theta == pytest.approx(dv @ n, abs=1e-9 * (1 + vi + vt))
    assert -math.pi < rel.theta_i <= math.pi
    assert -math.pi < rel.theta_t <= math.pi


def test_derivatives_unforced():
    i, t = launch()
    d = engagement_derivatives(EngagementState(i, t, 0.0), 0.0)
    assert d.speed_i == 0.0 and d.gamma_i == 0.0
    assert d.x_i == pytest.approx(70 * math.cos(math.radians(15)))
    assert d.speed_t == 0.0 and d.gamma_t == 0.0


def test_derivatives_axial_component():
    # lead angle 90 deg puts the whole acceleration along the velocity
    i = VehicleState(0, 0, 70, math.pi / 2)
    t = VehicleState(5000, 0, 50, 0.0)
    d = engagement_derivatives(EngagementState(i, t, 8.0), 0.0)
    assert d.speed_i == pytest.approx(8.0)
    assert d.gamma_i == pytest.approx(0.0, abs=1e-15)


def test_derivatives_launch_unit_accel():
    i, t = launch()
    d = engagement_derivatives(EngagementState(i, t, 1.0), 0.5)
    assert d.gamma_i == pytest.approx(0.013799, abs=5e-7)
    assert d.gamma_i == pytest.approx(math.cos(math.radians(15)) / 70, rel=1e-14)
    assert d.speed_i == pytest.approx(0.258819, abs=5e-7)
    assert d.a_i == 0.5


def test_derivatives_acceleration_is_normal_to_los():
    # velocity change (dV, V dgamma) rotated to inertial axes is perpendicular to the LOS
    i = VehicleState(0, 0, 70, 0.7)
    t = VehicleState(3000, 1000, 50, 2.0)
    d = engagement_derivatives(EngagementState(i, t, 3.0), 0.0)
    ax = d.speed_i * math.cos(i.gamma) - i.speed * d.gamma_i * math.sin(i.gamma)
    ay = d.speed_i * math.sin(i.gamma) + i.speed * d.gamma_i * math.cos(i.gamma)
    los = math.atan2(1000, 3000)
    assert ax * math.cos(los) + ay * math.sin(los) == pytest.approx(0.0, abs=1e-12)
    assert math.hypot(ax, ay) == pytest.approx(3.0)


def test_speed_floor():
    i = VehicleState(0, 0, 0.5, 0.0)
    with pytest.raises(SpeedFloor):
        engagement_derivatives(EngagementState(i, VehicleState(100, 0, 0, 0), 0.0), 0.0)


@pytest.mark.slow
def test_range_rate_matches_cartesian_finite_difference():
    _, log = single_run("section_a", "t_d=70")
    dt = log.meta["dt"]
    dr = np.diff(log["r"]) / dt
    vr_mid = 0.5 * (log["v_r"][1:] + log["v_r"][:-1])
    assert np.max(np.abs(dr - vr_mid)) < 10 * dt * np.max(np.abs(log["a_i"]))
