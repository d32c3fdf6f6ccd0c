"""Velocity obstacles, PD formation control and neighbour-averaging consensus."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .network import CommGraph
from .world_model import wrap_angle

N_HEADINGS = 36
N_SPEEDS = 8


@dataclass(frozen=True)
class VelocityObstacle:
    apex: tuple[float, float]  # p_j - p_i
    combined_radius: float
    obstacle_velocity: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.combined_radius > 0:
            raise ValueError("combined_radius must be positive")


def min_distance_within(vo: VelocityObstacle, v, tau: float) -> float:
    """Smallest separation over t in (0, tau] if robot i holds velocity ``v``."""
    ax, ay = vo.apex
    wx = vo.obstacle_velocity[0] - v[0]
    wy = vo.obstacle_velocity[1] - v[1]
    ww = wx * wx + wy * wy
    if ww == 0.0:
        return math.hypot(ax, ay)
    t = -(ax * wx + ay * wy) / ww
    # t -> 0+ is included as a limit
    t = min(max(t, 0.0), tau)
    return math.hypot(ax + t * wx, ay + t * wy)


def in_velocity_obstacle(v, vo: VelocityObstacle, tau: float) -> bool:
    if not tau > 0:
        raise ValueError("tau must be positive")
    return min_distance_within(vo, v, tau) <= vo.combined_radius


@lru_cache(maxsize=8)
def _polar_grid(v_max: float) -> np.ndarray:
    ang = 2.0 * math.pi * np.arange(N_HEADINGS) / N_HEADINGS
    speed = v_max * np.arange(1, N_SPEEDS + 1) / N_SPEEDS
    grid = np.stack([np.outer(np.cos(ang), speed), np.outer(np.sin(ang), speed)], axis=-1)
    grid = grid.reshape(-1, 2)
    grid.setflags(write=False)
    return grid


def candidate_velocities(v_pref, v_max: float) -> list[tuple[float, float]]:
    """v_pref, zero, then the 36 x 8 polar grid, in that fixed order."""
    head = [(float(v_pref[0]), float(v_pref[1])), (0.0, 0.0)]
    return head + [(float(x), float(y)) for x, y in _polar_grid(v_max)]


def _min_distances(cands: np.ndarray, apex: np.ndarray, obst_vel: np.ndarray, tau: float) -> np.ndarray:
    """Vectorised ``min_distance_within`` for every (candidate, obstacle) pair."""
    wx = obst_vel[None, :, 0] - cands[:, None, 0]
    wy = obst_vel[None, :, 1] - cands[:, None, 1]
    ax = apex[None, :, 0]
    ay = apex[None, :, 1]
    ww = wx * wx + wy * wy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = -(ax * wx + ay * wy) / ww
    t = np.where(ww == 0.0, 0.0, np.minimum(np.maximum(t, 0.0), tau))
    return np.hypot(ax + t * wx, ay + t * wy)


def select_velocity(
    v_pref, obstacles: Sequence[VelocityObstacle], v_max: float, tau: float
) -> tuple[tuple[float, float], bool]:
    """Closest collision-free candidate to ``v_pref``; returns (velocity, blocked)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    cands = np.vstack([[float(v_pref[0]), float(v_pref[1])], [0.0, 0.0], _polar_grid(v_max)])
    if obstacles:
        apex = np.array([vo.apex for vo in obstacles], dtype=float)
        vel = np.array([vo.obstacle_velocity for vo in obstacles], dtype=float)
        radius = np.array([vo.combined_radius for vo in obstacles])
        free = ~np.any(_min_distances(cands, apex, vel, tau) <= radius[None, :], axis=1)
    else:
        free = np.ones(len(cands), dtype=bool)
    if not free.any():
        return (0.0, 0.0), True
    d = np.hypot(cands[:, 0] - cands[0, 0], cands[:, 1] - cands[0, 1])
    d[~free] = np.inf
    best = int(np.argmin(d))
    return (float(cands[best, 0]), float(cands[best, 1])), False


@dataclass(frozen=True)
class PdGains:
    kp: float
    kd: float

    def __post_init__(self):
        if not self.kp > 0:
            raise ValueError(f"K_p must be positive, got {self.kp}")
        if not self.kd > 2.0 * math.sqrt(self.kp):
            raise ValueError(f"K_d={self.kd} must exceed 2*sqrt(K_p)={2.0 * math.sqrt(self.kp):.6g}")


def pd_control(q, q_dot, q_d, gains: PdGains) -> np.ndarray:
    """u = -Kp (q - q_d) - Kd q_dot; a third component is treated as an angle."""
    q = np.asarray(q, dtype=float)
    err = q - np.asarray(q_d, dtype=float)
    if err.shape[0] == 3:
        err[2] = wrap_angle(err[2])
    return -gains.kp * err - gains.kd * np.asarray(q_dot, dtype=float)


class ConsensusStepWarning(UserWarning):
    pass


def consensus_step(values: Sequence[float], graph: CommGraph, epsilon_step: float) -> list[float]:
    if not epsilon_step > 0:
        raise ValueError("epsilon_step must be positive")
    d_max = graph.max_degree
    if d_max > 0 and epsilon_step >= 1.0 / d_max:
        warnings.warn(
            f"step {epsilon_step} >= 1/d_max = {1.0 / d_max:.6g}; convergence is not guaranteed",
            ConsensusStepWarning,
            stacklevel=2,
        )
    snapshot = [float(v) for v in values]
    out = []
    for i, xi in enumerate(snapshot):
        acc = 0.0
        for j in graph.neighbors(i):
            acc += snapshot[j] - xi
        out.append(xi + epsilon_step * acc)
    return out
