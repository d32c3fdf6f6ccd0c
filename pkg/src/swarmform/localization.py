"""GPS sensor model and the two pose estimators (complementary filter, EKF)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .locomotion import WheelCommand, arc_displacement, dead_reckon
from .world_model import Pose, wrap_angle

OMEGA_EPS = 1e-9


@dataclass(frozen=True)
class GpsFix:
    x: float
    y: float
    timestamp: float = 0.0


def sample_gps(true_pos, sigma_gps: float, rng: np.random.Generator, timestamp: float = 0.0) -> GpsFix:
    if sigma_gps < 0:
        raise ValueError("sigma_gps must be non-negative")
    noise = rng.standard_normal(2) * sigma_gps
    return GpsFix(float(true_pos[0] + noise[0]), float(true_pos[1] + noise[1]), timestamp)


def complementary_fuse(odom, gps, alpha: float) -> tuple[float, float]:
    """Blend an odometry position with a GPS fix; ``gps=None`` passes odometry through."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if gps is None:
        return (float(odom[0]), float(odom[1]))
    return (
        alpha * gps[0] + (1.0 - alpha) * odom[0],
        alpha * gps[1] + (1.0 - alpha) * odom[1],
    )


class ComplementaryEstimator:
    """Dead reckoning between fixes, convex GPS blend on each fix.

    The dead-reckoning origin is moved to the fused estimate after every
    blend, which is what keeps odometry drift bounded.
    """

    name = "complementary"

    def __init__(self, initial: Pose, alpha: float):
        self.alpha = alpha
        self.pose = initial
        self.last_gps: Optional[GpsFix] = None

    def on_odometry(self, ds: float, dtheta: float, dt: float) -> None:
        self.pose = dead_reckon(self.pose, ds, dtheta)

    def on_gps(self, fix: GpsFix) -> None:
        x, y = complementary_fuse(self.pose.xy, (fix.x, fix.y), self.alpha)
        self.pose = Pose(x, y, self.pose.theta)
        self.last_gps = fix

    def rebase(self, x: float, y: float) -> None:
        self.pose = Pose(x, y, self.pose.theta)


@dataclass(frozen=True)
class EkfState:
    mu: np.ndarray  # [x, y, theta]
    sigma: np.ndarray  # 3x3

    @property
    def pose(self) -> Pose:
        return Pose(float(self.mu[0]), float(self.mu[1]), float(self.mu[2]))


def motion_jacobian(mu: np.ndarray, cmd: WheelCommand, dt: float) -> np.ndarray:
    """d g / d state for the exact-arc motion model."""
    theta = mu[2]
    v, w = cmd.v, cmd.omega
    G = np.eye(3)
    if abs(w) < OMEGA_EPS:
        G[0, 2] = -v * dt * math.sin(theta)
        G[1, 2] = v * dt * math.cos(theta)
    else:
        r = v / w
        G[0, 2] = r * (math.cos(theta + w * dt) - math.cos(theta))
        G[1, 2] = r * (math.sin(theta + w * dt) - math.sin(theta))
    return G


def motion_model(mu: np.ndarray, cmd: WheelCommand, dt: float) -> np.ndarray:
    dx, dy, dth = arc_displacement(float(mu[2]), cmd.v, cmd.omega, dt)
    return np.array([mu[0] + dx, mu[1] + dy, wrap_angle(mu[2] + dth)])


def ekf_predict(state: EkfState, cmd: WheelCommand, dt: float, R: np.ndarray) -> EkfState:
    if not dt > 0:
        raise ValueError("dt must be positive")
    G = motion_jacobian(state.mu, cmd, dt)
    mu = motion_model(state.mu, cmd, dt)
    sigma = G @ state.sigma @ G.T + np.asarray(R, dtype=float)
    return EkfState(mu, 0.5 * (sigma + sigma.T))


H_GPS = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def ekf_update(state: EkfState, z: GpsFix, Q: np.ndarray) -> EkfState:
    """Position-only measurement update in Joseph form.

    Raises ``np.linalg.LinAlgError`` if the innovation covariance is singular;
    the caller keeps its previous state in that case.
    """
    Q = np.asarray(Q, dtype=float)
    H = H_GPS
    S = H @ state.sigma @ H.T + Q
    if np.linalg.cond(S) > 1e15:
        raise np.linalg.LinAlgError("innovation covariance is singular")
    K = np.linalg.solve(S, H @ state.sigma).T
    innovation = np.array([z.x, z.y]) - H @ state.mu
    mu = state.mu + K @ innovation
    mu[2] = wrap_angle(mu[2])
    A = np.eye(3) - K @ H
    sigma = A @ state.sigma @ A.T + K @ Q @ K.T
    return EkfState(mu, 0.5 * (sigma + sigma.T))


class EkfEstimator:
    """Pose-only EKF driven by encoder increments, corrected by GPS fixes.

    Process noise per step is ``diag(k1|ds|, k1|ds|, k2|dtheta|)`` plus a small
    floor; measurement noise is ``sigma_gps^2 I``.
    """

    name = "ekf"
    PROCESS_FLOOR = 1e-10

    def __init__(self, initial: Pose, initial_sigma: np.ndarray, k1: float, k2: float, sigma_gps: float):
        self.state = EkfState(initial.as_array(), np.asarray(initial_sigma, dtype=float))
        self.k1, self.k2 = k1, k2
        self.Q = (sigma_gps**2) * np.eye(2)
        self.last_gps: Optional[GpsFix] = None

    @property
    def pose(self) -> Pose:
        return self.state.pose

    def on_odometry(self, ds: float, dtheta: float, dt: float) -> None:
        cmd = WheelCommand(ds / dt, dtheta / dt)
        R = np.diag([self.k1 * abs(ds), self.k1 * abs(ds), self.k2 * abs(dtheta)]) + self.PROCESS_FLOOR * np.eye(3)
        self.state = ekf_predict(self.state, cmd, dt, R)

    def on_gps(self, fix: GpsFix) -> None:
        if not np.any(self.Q):
            # noiseless GPS: snap the position block directly
            mu = self.state.mu.copy()
            mu[:2] = (fix.x, fix.y)
            sigma = self.state.sigma.copy()
            sigma[:2, :] = 0.0
            sigma[:, :2] = 0.0
            self.state = EkfState(mu, sigma)
        else:
            try:
                self.state = ekf_update(self.state, fix, self.Q)
            except np.linalg.LinAlgError:
                return
        self.last_gps = fix

    def rebase(self, x: float, y: float) -> None:
        mu = self.state.mu.copy()
        mu[:2] = (x, y)
        self.state = EkfState(mu, self.state.sigma)

