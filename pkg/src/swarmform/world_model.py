"""Geometric and scenario types shared across the simulator."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
GRID_SNAP_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario document. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def wrap_angle(theta: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    theta = float(theta)
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta!r}")
    if -math.pi <= theta < math.pi:
        return theta
    wrapped = math.fmod(theta + math.pi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    wrapped -= math.pi
    # fmod/add can round onto the open end of the interval
    if wrapped >= math.pi:
        wrapped -= TWO_PI
    if wrapped < -math.pi:
        wrapped = -math.pi
    return wrapped


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


def shape_centroid(cells: Sequence[Sequence[float]]) -> tuple[float, float]:
    if len(cells) == 0:
        raise ValueError("centroid of an empty shape is undefined")
    arr = np.asarray(cells, dtype=float)
    return (float(arr[:, 0].mean()), float(arr[:, 1].mean()))


@dataclass(frozen=True)
class TargetShape:
    """Target cells in world coordinates, snapped to a square grid of ``cell_size``."""

    cells: tuple[tuple[float, float], ...]
    cell_size: float = 0.25

    def __post_init__(self):
        cells = tuple((float(x), float(y)) for x, y in self.cells)
        object.__setattr__(self, "cells", cells)
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if len(set(cells)) != len(cells):
            raise ValueError("target cells must be pairwise distinct")
        for i, (x, y) in enumerate(cells):
            for v in (x, y):
                k = round(v / self.cell_size)
                if abs(v - k * self.cell_size) > GRID_SNAP_TOL:
                    raise ValueError(f"cell {i} ({x}, {y}) is not on the {self.cell_size} m grid")

    @property
    def centroid(self) -> tuple[float, float]:
        return shape_centroid(self.cells)

    def __len__(self):
        return len(self.cells)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.cells, dtype=float).reshape(-1, 2)


# Parameter groups. Defaults are the TurtleBot3 Burger experiment values where
# one was reported; the rest are documented engineering choices.


@dataclass(frozen=True)
class RobotParams:
    v_max: float = 0.22
    omega_max: float = 2.84
    wheel_radius: float = 0.033
    wheelbase: float = 0.16
    body_radius: float = 0.08


@dataclass(frozen=True)
class SensingParams:
    sigma_gps: float = 0.05
    alpha: float = 0.7
    k1: float = 0.01  # m^2 per m travelled
    k2: float = 0.005  # m^2 per rad turned
    k_heading: float = 2e-5  # rad^2 per rad turned (heading channel of encoder slip)
    gps_period_ticks: int = 2
    survey_fixes: int = 40
    estimator: str = "complementary"


@dataclass(frozen=True)
class CommsParams:
    r_comm_local: float = 0.2
    loss_probability: float = 0.0


@dataclass(frozen=True)
class ProtocolParams:
    k_row_size: int = 6
    epsilon_pos: float = 0.05
    start_offset: float = 0.25
    delay_base: float = 1.0
    delay_step: float = 3.0
    reverify_period: float = 1.0
    cell_size: float = 0.25
    heading_tol: float = 0.05
    k_v: float = 1.0
    k_omega: float = 2.0
    vo_enabled: bool = True
    vo_horizon: float = 5.0
    vo_sensing_range: float = 1.0
    settle_time: float = 6.0
    settle_tol: float = 0.02
    stage_slack: float = 2.0


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.05
    seed: int = 0
    max_ticks: int = 20000


_SECTIONS = {
    "robot": RobotParams,
    "sensing": SensingParams,
    "comms": CommsParams,
    "protocol": ProtocolParams,
    "sim": SimParams,
}


@dataclass(frozen=True)
class ScenarioConfig:
    initial_poses: tuple[Pose, ...]
    shape: TargetShape
    robot: RobotParams = field(default_factory=RobotParams)
    sensing: SensingParams = field(default_factory=SensingParams)
    comms: CommsParams = field(default_factory=CommsParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    sim: SimParams = field(default_factory=SimParams)

    def __post_init__(self):
        validate_config(self)

    @property
    def n_robots(self) -> int:
        return len(self.initial_poses)

    def replace(self, **sections: dict[str, Any]) -> "ScenarioConfig":
        """Copy with some section fields overridden, e.g. ``replace(sim={"seed": 3})``."""
        kwargs = {}
        for name, overrides in sections.items():
            current = getattr(self, name)
            kwargs[name] = type(current)(**{**asdict(current), **overrides})
        return ScenarioConfig(
            initial_poses=self.initial_poses,
            shape=self.shape,
            **{n: kwargs.get(n, getattr(self, n)) for n in _SECTIONS},
        )


def validate_config(cfg: ScenarioConfig) -> None:
    r, s, c, p, sim = cfg.robot, cfg.sensing, cfg.comms, cfg.protocol, cfg.sim
    positive = [
        ("robot.v_max", r.v_max),
        ("robot.omega_max", r.omega_max),
        ("robot.wheel_radius", r.wheel_radius),
        ("robot.wheelbase", r.wheelbase),
        ("robot.body_radius", r.body_radius),
        ("protocol.epsilon_pos", p.epsilon_pos),
        ("protocol.reverify_period", p.reverify_period),
        ("protocol.cell_size", p.cell_size),
        ("protocol.heading_tol", p.heading_tol),
        ("protocol.k_v", p.k_v),
        ("protocol.k_omega", p.k_omega),
        ("protocol.vo_horizon", p.vo_horizon),
        ("sim.dt", sim.dt),
    ]
    for path, value in positive:
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ScenarioError(path, f"must be a finite number > 0, got {value!r}")
    non_negative = [
        ("sensing.sigma_gps", s.sigma_gps),
        ("sensing.k1", s.k1),
        ("sensing.k2", s.k2),
        ("sensing.k_heading", s.k_heading),
        ("comms.r_comm_local", c.r_comm_local),
        ("protocol.start_offset", p.start_offset),
        ("protocol.delay_base", p.delay_base),
        ("protocol.delay_step", p.delay_step),
        ("protocol.settle_time", p.settle_time),
        ("protocol.settle_tol", p.settle_tol),
        ("protocol.stage_slack", p.stage_slack),
    ]
    for path, value in non_negative:
        if not (isinstance(value, (int, float)) and value >= 0):
            raise ScenarioError(path, f"must be >= 0, got {value!r}")
    if not 0.0 <= s.alpha <= 1.0:
        raise ScenarioError("sensing.alpha", f"must lie in [0, 1], got {s.alpha!r}")
    if not 0.0 <= c.loss_probability < 1.0:
        raise ScenarioError("comms.loss_probability", f"must lie in [0, 1), got {c.loss_probability!r}")
    if s.estimator not in ("complementary", "ekf"):
        raise ScenarioError("sensing.estimator", f"unknown estimator {s.estimator!r}")
    for path, value in [
        ("sensing.gps_period_ticks", s.gps_period_ticks),
        ("sensing.survey_fixes", s.survey_fixes),
        ("protocol.k_row_size", p.k_row_size),
        ("sim.max_ticks", sim.max_ticks),
    ]:
        if not (isinstance(value, int) and value >= 1):
            raise ScenarioError(path, f"must be an integer >= 1, got {value!r}")
    if not isinstance(sim.seed, int) or not 0 <= sim.seed < 2**64:
        raise ScenarioError("sim.seed", f"must be a 64-bit unsigned integer, got {sim.seed!r}")
    if abs(cfg.shape.cell_size - p.cell_size) > GRID_SNAP_TOL:
        raise ScenarioError("protocol.cell_size", "does not match the target shape cell size")
    if len(cfg.initial_poses) != len(cfg.shape.cells):
        raise ScenarioError(
            "initial_poses",
            f"robot/cell mismatch: {len(cfg.initial_poses)} robots for {len(cfg.shape.cells)} target cells",
        )


def _parse_section(name: str, cls, raw: Any):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ScenarioError(name, "must be an object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ScenarioError(f"{name}.{key}", "unknown key")
        default = known[key].default
        path = f"{name}.{key}"
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ScenarioError(path, "must be a boolean")
        elif isinstance(default, int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScenarioError(path, "must be an integer")
        elif isinstance(default, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScenarioError(path, "must be a number")
            value = float(value)
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ScenarioError(path, "must be a string")
        kwargs[key] = value
    return cls(**kwargs)


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ScenarioError("$", "scenario document must be a JSON object")
    allowed = set(_SECTIONS) | {"initial_poses", "targets"}
    for key in doc:
        if key not in allowed:
            raise ScenarioError(key, "unknown key")
    for key in ("initial_poses", "targets"):
        if key not in doc:
            raise ScenarioError(key, "required")
    sections = {name: _parse_section(name, cls, doc.get(name)) for name, cls in _SECTIONS.items()}

    poses = []
    for i, item in enumerate(doc["initial_poses"]):
        if not (isinstance(item, list) and len(item) == 3):
            raise ScenarioError(f"initial_poses[{i}]", "must be [x, y, theta]")
        try:
            poses.append(Pose(*(float(v) for v in item)))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"initial_poses[{i}]", str(exc)) from None
    cells = []
    for i, item in enumerate(doc["targets"]):
        if not (isinstance(item, list) and len(item) == 2):
            raise ScenarioError(f"targets[{i}]", "must be [x, y]")
        cells.append((float(item[0]), float(item[1])))
    try:
        shape = TargetShape(tuple(cells), cell_size=sections["protocol"].cell_size)
    except ValueError as exc:
        raise ScenarioError("targets", str(exc)) from None
    return ScenarioConfig(initial_poses=tuple(poses), shape=shape, **sections)


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"malformed JSON ({exc})") from None
    return config_from_dict(doc)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    doc = {name: asdict(getattr(cfg, name)) for name in _SECTIONS}
    doc["initial_poses"] = [[p.x, p.y, p.theta] for p in cfg.initial_poses]
    doc["targets"] = [[x, y] for x, y in cfg.shape.cells]
    return doc


def dump_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)
