import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import angle_diff, euler_pose

from swarmform.locomotion import (
    ControllerConfig,
    OdometryState,
    WheelCommand,
    axis_aligned_controller,
    dead_reckon,
    integrate_pose,
    odometry_step,
    saturate,
    simulate_encoders,
    wheel_increments_to_motion,
)
from swarmform.world_model import Pose

R, L = 0.033, 0.16


def test_integrate_straight_and_rotation():
    p = integrate_pose(Pose(0, 0, 0), WheelCommand(1, 0), 1)
    assert (p.x, p.y, p.theta) == pytest.approx((1, 0, 0))
    p = integrate_pose(Pose(0, 0, 0), WheelCommand(0, math.pi / 2), 1)
    assert (p.x, p.y, p.theta) == pytest.approx((0, 0, math.pi / 2))


def test_integrate_half_circle():
    p = integrate_pose(Pose(0, 0, 0), WheelCommand(1, 1), math.pi)
    assert p.x == pytest.approx(0, abs=1e-12)
    assert p.y == pytest.approx(2, abs=1e-12)
    assert p.theta == pytest.approx(-math.pi)


def test_half_circle_matches_euler_oracle():
    x, y, _ = euler_pose((0, 0, 0), [(1, 1, math.pi)], total_substeps=10_000_000)
    p = integrate_pose(Pose(0, 0, 0), WheelCommand(1, 1), math.pi)
    assert math.hypot(p.x - x, p.y - y) < 1e-6


def test_integrate_rejects_bad_input():
    with pytest.raises(ValueError):
        integrate_pose(Pose(0, 0, 0), WheelCommand(1, 0), 0)
    with pytest.raises(ValueError):
        integrate_pose(Pose(0, 0, 0), WheelCommand(float("nan"), 0), 0.05)


@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(-math.pi, math.pi),
    st.floats(-0.22, 0.22),
    st.floats(1e-3, 0.05),
)
def test_straight_motion_keeps_heading(x, y, theta, v, dt):
    p = integrate_pose(Pose(x, y, theta), WheelCommand(v, 0.0), dt)
    assert p.theta == Pose(0, 0, theta).theta


@given(
    st.floats(-0.22, 0.22),
    st.floats(-2.84, 2.84),
    st.floats(-math.pi, math.pi),
    st.floats(0.001, 0.05),
)
def test_arc_matches_euler_within_dt_bounds(v, w, theta, dt):
    x, y, th = euler_pose((0.0, 0.0, theta), [(v, w, dt)], total_substeps=200_000)
    p = integrate_pose(Pose(0, 0, theta), WheelCommand(v, w), dt)
    assert math.hypot(p.x - x, p.y - y) < 1e-6
    assert angle_diff(p.theta, th) < 1e-9


@pytest.mark.parametrize(
    "cmd, expected",
    [((0.5, 0), (0.22, 0)), ((0.1, 0.1), (0.1, 0.1)), ((-1, -5), (-0.22, -2.84))],
)
def test_saturate_examples(cmd, expected):
    out = saturate(WheelCommand(*cmd), 0.22, 2.84)
    assert (out.v, out.omega) == expected


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_saturate_idempotent(v, w):
    once = saturate(WheelCommand(v, w), 0.22, 2.84)
    assert saturate(once, 0.22, 2.84) == once
    assert abs(once.v) <= 0.22 and abs(once.omega) <= 2.84


def test_odometry_examples():
    assert wheel_increments_to_motion(1, 1, R, L) == pytest.approx((0.033, 0.0))
    ds, dth = wheel_increments_to_motion(1, -1, R, L)
    assert ds == pytest.approx(0.0)
    assert dth == pytest.approx(0.4125)
    p = dead_reckon(Pose(0, 0, 0), 1.0, 0.0)
    assert (p.x, p.y, p.theta) == (1, 0, 0)


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), max_size=50))
def test_odometry_drift_accumulates(steps):
    state = OdometryState(Pose(0, 0, 0))
    d = turn = 0.0
    for r_inc, l_inc in steps:
        prev = state
        state = odometry_step(state, r_inc, l_inc, R, L)
        ds, dth = wheel_increments_to_motion(r_inc, l_inc, R, L)
        d += abs(ds)
        turn += abs(dth)
        assert state.distance >= prev.distance and state.cumulative_turn >= prev.cumulative_turn
        assert state.sigma2 == pytest.approx(state.k1 * d + state.k2 * turn, abs=1e-12)


def test_odometry_rejects_bad_geometry():
    with pytest.raises(ValueError):
        odometry_step(OdometryState(Pose(0, 0, 0)), 1, 1, 0.0, L)


def test_encoders_invert_kinematics():
    assert simulate_encoders(WheelCommand(0.033, 0.0), 1.0, R, L) == pytest.approx((1.0, 1.0))


def test_noiseless_encoders_reproduce_integration():
    rng = np.random.default_rng(3)
    dt = 0.001
    pose = Pose(0, 0, 0.3)
    odo = OdometryState(pose)
    for _ in range(1000):
        cmd = WheelCommand(rng.uniform(-0.22, 0.22), rng.uniform(-2.84, 2.84))
        pose = integrate_pose(pose, cmd, dt)
        odo = odometry_step(odo, *simulate_encoders(cmd, dt, R, L), R, L)
    est = odo.pose_estimate
    assert math.hypot(est.x - pose.x, est.y - pose.y) < 1e-4


def test_encoder_slip_variance_matches_drift_law():
    # straight 10 m run in 0.5 m steps; k1 = 0.01 gives variance 0.1 m^2 along track
    steps, seeds = 20, 1000
    finals = []
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        odo = OdometryState(Pose(0, 0, 0))
        for _ in range(steps):
            odo = odometry_step(odo, *simulate_encoders(WheelCommand(0.5, 0.0), 1.0, R, L, rng, k1=0.01), R, L)
        finals.append((odo.pose_estimate.x, odo.pose_estimate.y))
    finals = np.asarray(finals)
    var = float(np.sum(np.var(finals, axis=0)))
    assert 0.08 <= var <= 0.12


def test_encoder_stream_advances_without_noise_terms():
    a, b = np.random.default_rng(1), np.random.default_rng(1)
    simulate_encoders(WheelCommand(0.0, 0.0), 0.05, R, L, a, k1=0.01)
    simulate_encoders(WheelCommand(0.2, 1.0), 0.05, R, L, b, k1=0.01)
    assert a.random() == b.random()


CFG = ControllerConfig()


def test_controller_drives_along_y_first():
    out = axis_aligned_controller(Pose(0, 0, math.pi / 2), (1, 2), CFG)
    assert out.axis == "y" and out.cmd.v > 0 and out.cmd.omega == pytest.approx(0)


def test_controller_arrived():
    out = axis_aligned_controller(Pose(1, 2, 0), (1, 2), CFG)
    assert out.arrived and out.cmd == WheelCommand(0, 0)


def test_controller_rotates_toward_negative_y():
    out = axis_aligned_controller(Pose(0, 0, 0), (0, -1), CFG)
    assert out.cmd.v == 0 and out.cmd.omega < 0


def test_controller_x_leg_hysteresis():
    # 0.08 m off in y: a fresh start corrects y, a robot already on its X leg keeps going
    pose = Pose(0, 0.08, 0)
    assert axis_aligned_controller(pose, (1, 0), CFG).axis == "y"
    assert axis_aligned_controller(pose, (1, 0), CFG, leg="x").axis == "x"
    assert axis_aligned_controller(Pose(0, 0.04, 0), (1, 0), CFG, leg="recenter").axis == "recenter"


@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(-math.pi, math.pi),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_closed_loop_reaches_goal(x, y, theta, gx, gy):
    pose, dt = Pose(x, y, theta), 0.05
    leg = ""
    prev_y_err = abs(gy - y)
    for _ in range(20_000):
        out = axis_aligned_controller(pose, (gx, gy), CFG, leg)
        if out.arrived:
            break
        leg = out.axis
        pose = integrate_pose(pose, saturate(out.cmd, CFG.v_max, CFG.omega_max), dt)
        y_err = abs(gy - pose.y)
        assert y_err <= prev_y_err + CFG.v_max * dt + 1e-12
        if out.axis == "y":
            assert y_err <= prev_y_err + 1e-9
        prev_y_err = y_err
    assert out.arrived
    assert abs(gx - pose.x) <= CFG.epsilon_pos and abs(gy - pose.y) <= CFG.epsilon_pos
