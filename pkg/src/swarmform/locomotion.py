"""Differential-drive kinematics, encoder odometry and the axis-aligned controller."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .world_model import Pose, wrap_angle

STRAIGHT_EPS = 1e-9


@dataclass(frozen=True)
class WheelCommand:
    v: float = 0.0
    omega: float = 0.0


ZERO_COMMAND = WheelCommand(0.0, 0.0)


def saturate(cmd: WheelCommand, v_max: float, omega_max: float) -> WheelCommand:
    v = min(max(cmd.v, -v_max), v_max)
    omega = min(max(cmd.omega, -omega_max), omega_max)
    return WheelCommand(v, omega)


def arc_displacement(theta: float, v: float, omega: float, dt: float) -> tuple[float, float, float]:
    """Exact unicycle displacement (dx, dy, dtheta) over ``dt`` at constant (v, omega)."""
    dtheta = omega * dt
    if abs(omega) < STRAIGHT_EPS:
        return v * dt * math.cos(theta), v * dt * math.sin(theta), dtheta
    ratio = v / omega
    dx = ratio * (math.sin(theta + dtheta) - math.sin(theta))
    dy = -ratio * (math.cos(theta + dtheta) - math.cos(theta))
    return dx, dy, dtheta


def integrate_pose(pose: Pose, cmd: WheelCommand, dt: float) -> Pose:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not all(math.isfinite(v) for v in (pose.x, pose.y, cmd.v, cmd.omega, dt)):
        raise ValueError("non-finite input to integrate_pose")
    dx, dy, dtheta = arc_displacement(pose.theta, cmd.v, cmd.omega, dt)
    return Pose(pose.x + dx, pose.y + dy, pose.theta + dtheta)


@dataclass(frozen=True)
class OdometryState:
    """Dead-reckoned pose plus the accumulated drift model.

    ``sigma2`` follows ``k1 * distance + k2 * cumulative_turn``.
    """

    pose_estimate: Pose
    distance: float = 0.0
    cumulative_turn: float = 0.0
    sigma2: float = 0.0
    k1: float = 0.01
    k2: float = 0.005


def wheel_increments_to_motion(dphi_r: float, dphi_l: float, r: float, L: float) -> tuple[float, float]:
    ds = 0.5 * r * (dphi_r + dphi_l)
    dtheta = r / L * (dphi_r - dphi_l)
    return ds, dtheta


def dead_reckon(pose: Pose, ds: float, dtheta: float) -> Pose:
    heading = pose.theta + 0.5 * dtheta
    return Pose(pose.x + ds * math.cos(heading), pose.y + ds * math.sin(heading), pose.theta + dtheta)


def odometry_step(state: OdometryState, dphi_r: float, dphi_l: float, r: float, L: float) -> OdometryState:
    if r <= 0 or L <= 0:
        raise ValueError("wheel radius and wheelbase must be positive")
    ds, dtheta = wheel_increments_to_motion(dphi_r, dphi_l, r, L)
    distance = state.distance + abs(ds)
    turn = state.cumulative_turn + abs(dtheta)
    return replace(
        state,
        pose_estimate=dead_reckon(state.pose_estimate, ds, dtheta),
        distance=distance,
        cumulative_turn=turn,
        sigma2=state.k1 * distance + state.k2 * turn,
    )


def simulate_encoders(
    true_cmd: WheelCommand,
    dt: float,
    r: float,
    L: float,
    rng: np.random.Generator | None = None,
    k1: float = 0.0,
    k2: float = 0.0,
    k_heading: float = 0.0,
) -> tuple[float, float]:
    """Wheel angle increments for the motion commanded over ``dt``.

    Slip enters as common-mode noise on the travelled distance with variance
    ``k1*|ds| + k2*|dtheta|`` (so dead-reckoned position variance grows like
    the linear drift law) and as differential noise on the heading increment
    with variance ``k_heading*|dtheta|``. Passing ``rng=None`` disables noise.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    ds = true_cmd.v * dt
    dtheta = true_cmd.omega * dt
    if rng is not None:
        # draw both unconditionally so the stream advances identically every tick
        n_s, n_t = rng.standard_normal(2)
        ds += n_s * math.sqrt(k1 * abs(ds) + k2 * abs(dtheta))
        dtheta += n_t * math.sqrt(k_heading * abs(dtheta))
    half = 0.5 * dtheta * L
    return (ds + half) / r, (ds - half) / r


@dataclass(frozen=True)
class ControllerConfig:
    v_max: float = 0.22
    omega_max: float = 2.84
    epsilon_pos: float = 0.05
    heading_tol: float = 0.05
    k_v: float = 1.0
    k_omega: float = 2.0


@dataclass(frozen=True)
class ControlOutput:
    cmd: WheelCommand
    arrived: bool
    axis: str  # "y", "x", "recenter" or "" once arrived
    axis_error: float  # remaining distance along the active axis


def axis_aligned_controller(
    est_pose: Pose, goal: tuple[float, float], cfg: ControllerConfig, leg: str = ""
) -> ControlOutput:
    """Y-axis first, then X-axis; rotate in place whenever the heading is off.

    Heading uses a P law ``omega = k_omega * heading_error`` clamped to
    omega_max; translation uses ``min(v_max, k_v * axis_error)``.

    ``leg`` is the axis returned on the previous call for the same goal. Once
    on the X leg the robot only goes back to Y if the y error exceeds three
    times the tolerance, so estimate noise near the corner cannot make it spin
    between the two headings. ``leg="recenter"`` asks for the y error to be
    brought under half the tolerance before the X leg resumes; the caller uses
    it to pull a robot that is stuck off its lane back onto it.
    """
    y_err = goal[1] - est_pose.y
    x_err = goal[0] - est_pose.x
    if leg == "recenter":
        y_tol = 0.5 * cfg.epsilon_pos
    elif leg == "x" and abs(x_err) > cfg.epsilon_pos:
        y_tol = 3.0 * cfg.epsilon_pos
    else:
        y_tol = cfg.epsilon_pos
    if abs(y_err) > y_tol:
        axis, err = ("recenter" if leg == "recenter" else "y"), y_err
        target_heading = math.copysign(math.pi / 2, y_err)
    elif abs(x_err) > cfg.epsilon_pos:
        axis, err = "x", x_err
        target_heading = 0.0 if x_err > 0 else -math.pi
    else:
        return ControlOutput(ZERO_COMMAND, True, "", 0.0)

    heading_err = wrap_angle(target_heading - est_pose.theta)
    if abs(heading_err) > cfg.heading_tol:
        omega = min(max(cfg.k_omega * heading_err, -cfg.omega_max), cfg.omega_max)
        return ControlOutput(WheelCommand(0.0, omega), False, axis, abs(err))
    v = min(cfg.v_max, cfg.k_v * abs(err))
    omega = min(max(cfg.k_omega * heading_err, -cfg.omega_max), cfg.omega_max)
    return ControlOutput(WheelCommand(v, omega), False, axis, abs(err))
