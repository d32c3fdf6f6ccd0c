"""Deterministic fixed-step simulation of the whole swarm.

Each tick runs the same sub-phases for every robot, robots in ascending id:

1. deliver messages sent on the previous tick
2. sample sensors (encoders every tick, GPS on its schedule)
3. update estimators
4. step protocol state machines, queue outgoing messages
5. controller command, filtered through velocity obstacles
6. saturate and integrate the true poses
7. detect collisions
8. append trace events
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence

import numpy as np

from .localization import ComplementaryEstimator, EkfEstimator, GpsFix, sample_gps
from .locomotion import (
    ZERO_COMMAND,
    ControllerConfig,
    WheelCommand,
    axis_aligned_controller,
    integrate_pose,
    saturate,
    simulate_encoders,
    wheel_increments_to_motion,
)
from .network import Channel, Envelope, Network
from .row_protocol import (
    NUDGE_SPEED,
    AgentTiming,
    Phase,
    RowAgent,
    encode_message,
    partition_and_assign,
    stage_budget_ticks,
    starting_lines,
)
from .safety_control import VelocityObstacle, in_velocity_obstacle, select_velocity
from .world_model import Pose, ScenarioConfig, config_to_dict, wrap_angle

log = logging.getLogger(__name__)

# RNG stream layout: SeedSequence(seed, spawn_key=(owner, subsystem)).
# owner = robot id + 1, or 0 for engine-wide streams.
STREAM_GPS = 0
STREAM_ENCODER = 1
STREAM_SURVEY = 2
STREAM_NETWORK = 3
RECENTER_AFTER = 2.0  # seconds stalled on the X leg before re-centring on the lane


def make_stream(seed: int, owner: int, subsystem: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(owner, subsystem)))


def detect_collisions(positions: Sequence[Sequence[float]], body_radius: float) -> list[tuple[int, int]]:
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    ii, jj = np.nonzero(np.triu(d < 2.0 * body_radius, k=1))
    return [(int(i), int(j)) for i, j in zip(ii, jj)]


@dataclass
class RobotState:
    robot_id: int
    pose: Pose
    estimator: object
    agent: RowAgent
    gps_rng: np.random.Generator
    encoder_rng: np.random.Generator
    cmd: WheelCommand = ZERO_COMMAND
    velocity: tuple[float, float] = (0.0, 0.0)
    distance: float = 0.0
    blocked: bool = False
    leg: str = ""
    leg_goal: Optional[tuple[float, float]] = None
    stalled_ticks: int = 0  # consecutive ticks held at zero speed by the VO filter


@dataclass
class TraceEvent:
    tick: int
    robot: int
    true_pose: tuple[float, float, float]
    est_pose: tuple[float, float, float]
    phase: str
    cmd: tuple[float, float]
    sent: list[str]
    received: list[str]
    collision: bool
    blocked: bool

    def to_json(self) -> str:
        """One compact JSON object. Floats are written as given; the engine rounds them to 6 places."""
        t, e, c = self.true_pose, self.est_pose, self.cmd
        return (
            f'{{"tick":{self.tick},"robot":{self.robot},'
            f'"true":[{t[0]!r},{t[1]!r},{t[2]!r}],"est":[{e[0]!r},{e[1]!r},{e[2]!r}],'
            f'"phase":{json.dumps(self.phase)},"cmd":[{c[0]!r},{c[1]!r}],'
            f'"sent":{json.dumps(self.sent, separators=(",", ":"))},'
            f'"recv":{json.dumps(self.received, separators=(",", ":"))},'
            f'"collision":{"true" if self.collision else "false"},'
            f'"blocked":{"true" if self.blocked else "false"}}}'
        )


@dataclass
class RunReport:
    completed: bool
    timeout: bool
    completion_tick: Optional[int]
    ticks: int
    terminal_errors: list[float]
    collisions: int
    messages_sent: int
    messages_lost: int
    deliveries_attempted: int
    sent_by_type: dict
    distances: list[float]
    trace_digest: str
    late_releases: int = 0
    settle_retries: int = 0
    blocked_ticks: int = 0
    trace: Optional[IO[str]] = field(default=None, repr=False)

    @property
    def max_terminal_error(self) -> float:
        return max(self.terminal_errors, default=0.0)

    def metrics_row(self) -> dict:
        return {
            "completion_tick": self.completion_tick if self.completion_tick is not None else "",
            "collisions": self.collisions,
            "messages_sent": self.messages_sent,
            "messages_lost": self.messages_lost,
            "max_terminal_error_m": f"{self.max_terminal_error:.6f}",
            "timeout_flag": int(self.timeout),
        }


METRIC_COLUMNS = ["completion_tick", "collisions", "messages_sent", "messages_lost", "max_terminal_error_m", "timeout_flag"]


class Simulation:
    """World state plus the tick loop. ``trace`` receives JSONL if given."""

    def __init__(self, cfg: ScenarioConfig, trace: Optional[IO[str]] = None):
        self.cfg = cfg
        self.dt = cfg.sim.dt
        self.tick = 0
        self.trace = trace
        self._digest = hashlib.blake2b(digest_size=8)
        seed = cfg.sim.seed
        p = cfg.protocol
        positions = [q.xy for q in cfg.initial_poses]
        self.plan = partition_and_assign(cfg.shape, positions, p.k_row_size, p.start_offset, seated_tol=p.epsilon_pos) if positions else []
        self.start_lines = starting_lines(cfg.shape, p.start_offset) if len(cfg.shape) else (0.0, 0.0)
        budgets = stage_budget_ticks(self.plan, positions, cfg.robot.v_max, p.stage_slack, self.dt)
        timing = AgentTiming(
            dt=self.dt,
            epsilon_pos=p.epsilon_pos,
            reverify_period=p.reverify_period,
            delay_base=p.delay_base,
            delay_step=p.delay_step,
            settle_time=p.settle_time,
            settle_tol=p.settle_tol,
            heading_tol=p.heading_tol,
        )
        self.network = Network(len(positions), cfg.comms.r_comm_local, cfg.comms.loss_probability, make_stream(seed, 0, STREAM_NETWORK))
        self.robots: list[RobotState] = []
        for rid, pose in enumerate(cfg.initial_poses):
            survey = make_stream(seed, rid + 1, STREAM_SURVEY)
            initial = self._surveyed_pose(pose, survey)
            agent = RowAgent(self.plan[rid], self.plan, cfg.shape.cells, timing, budgets)
            self.robots.append(
                RobotState(
                    robot_id=rid,
                    pose=pose,
                    estimator=self._make_estimator(initial),
                    agent=agent,
                    gps_rng=make_stream(seed, rid + 1, STREAM_GPS),
                    encoder_rng=make_stream(seed, rid + 1, STREAM_ENCODER),
                )
            )
        self.collision_events = 0
        self.blocked_ticks = 0
        self.completion_tick: Optional[int] = None
        self._write(json.dumps({"type": "header", "seed": seed, "config": config_to_dict(cfg), "plan": self._plan_doc(), "start_lines": list(self.start_lines)}, separators=(",", ":")))

    def _surveyed_pose(self, pose: Pose, rng: np.random.Generator) -> Pose:
        """Initial estimate: true heading, position from averaged survey fixes."""
        s = self.cfg.sensing
        noise = rng.standard_normal(2) * s.sigma_gps / math.sqrt(s.survey_fixes)
        return Pose(pose.x + noise[0], pose.y + noise[1], pose.theta)

    def _make_estimator(self, initial: Pose):
        s = self.cfg.sensing
        if s.estimator == "ekf":
            var = s.sigma_gps**2 / s.survey_fixes
            return EkfEstimator(initial, np.diag([var, var, 1e-6]), s.k1, s.k2, s.sigma_gps)
        return ComplementaryEstimator(initial, s.alpha)

    def _plan_doc(self) -> list:
        return [
            {
                "robot": a.robot_id,
                "target": list(a.target),
                "row": a.row,
                "side": a.side.value,
                "order": a.order,
                "start": list(a.start_point),
                "staging": list(a.staging_point),
            }
            for a in self.plan
        ]

    def _write(self, line: str) -> None:
        self._digest.update(line.encode())
        self._digest.update(b"\n")
        if self.trace is not None:
            self.trace.write(line + "\n")

    @property
    def clock(self) -> float:
        return self.tick * self.dt

    @property
    def all_done(self) -> bool:
        return all(r.agent.phase is Phase.DONE for r in self.robots)

    def step(self) -> None:
        cfg, dt, tick = self.cfg, self.dt, self.tick
        robots = self.robots
        n = len(robots)
        received: list[list[str]] = [[] for _ in range(n)]
        sent: list[list[str]] = [[] for _ in range(n)]

        # 1. delivery
        inbox = self.network.deliver(tick)
        for r in robots:
            for env in inbox.get(r.robot_id, ()):
                r.agent.receive(env.payload)
                received[r.robot_id].append(encode_message(env.payload))

        # 2-3. sensing and estimation
        fixes: list[Optional[GpsFix]] = [None] * n
        s = cfg.sensing
        gps_due = tick > 0 and tick % s.gps_period_ticks == 0
        for r in robots:
            if tick > 0:
                dphi_r, dphi_l = simulate_encoders(
                    r.cmd, dt, cfg.robot.wheel_radius, cfg.robot.wheelbase, r.encoder_rng, s.k1, s.k2, s.k_heading
                )
                ds, dtheta = wheel_increments_to_motion(dphi_r, dphi_l, cfg.robot.wheel_radius, cfg.robot.wheelbase)
                r.estimator.on_odometry(ds, dtheta, dt)
            if gps_due:
                fix = sample_gps(r.pose.xy, s.sigma_gps, r.gps_rng, tick * dt)
                fixes[r.robot_id] = fix
                if not r.agent.gps_suspended:
                    r.estimator.on_gps(fix)

        # 4. protocol
        positions = [r.pose.xy for r in robots]
        for r in robots:
            est = r.estimator.pose
            for msg in r.agent.decide(tick, est.xy, fixes[r.robot_id], est.theta):
                env = Envelope(r.robot_id, Channel.GLOBAL, msg, tick, self.network.next_seq(r.robot_id))
                self.network.broadcast(env, positions)
                sent[r.robot_id].append(encode_message(msg))
            if r.agent.rebase_request is not None:
                r.estimator.rebase(*r.agent.rebase_request)
                r.agent.rebase_request = None

        # 5. control
        commands = [self._command(r) for r in robots]
        for r, cmd in zip(robots, commands):
            r.stalled_ticks = r.stalled_ticks + 1 if r.blocked and cmd.v == 0.0 else 0

        # 6. integrate
        for r, cmd in zip(robots, commands):
            cmd = saturate(cmd, cfg.robot.v_max, cfg.robot.omega_max)
            new_pose = integrate_pose(r.pose, cmd, dt)
            step_len = math.hypot(new_pose.x - r.pose.x, new_pose.y - r.pose.y)
            r.distance += step_len
            r.velocity = ((new_pose.x - r.pose.x) / dt, (new_pose.y - r.pose.y) / dt)
            r.pose = new_pose
            r.cmd = cmd

        # 7. collisions
        pairs = detect_collisions([r.pose.xy for r in robots], cfg.robot.body_radius)
        self.collision_events += len(pairs)
        colliding = {i for pair in pairs for i in pair}
        if pairs:
            log.warning("tick %d: collisions %s", tick, pairs)

        # 8. trace
        rows = []
        for r in robots:
            est = r.estimator.pose
            rows.append((r.pose.x, r.pose.y, r.pose.theta, est.x, est.y, est.theta, r.cmd.v, r.cmd.omega))
        vals = np.round(np.asarray(rows, dtype=float).reshape(n, 8), 6).tolist()
        for r, v in zip(robots, vals):
            ev = TraceEvent(
                tick=tick,
                robot=r.robot_id,
                true_pose=tuple(v[0:3]),
                est_pose=tuple(v[3:6]),
                phase=r.agent.phase.name,
                cmd=tuple(v[6:8]),
                sent=sent[r.robot_id],
                received=received[r.robot_id],
                collision=r.robot_id in colliding,
                blocked=r.blocked,
            )
            self._write(ev.to_json())

        self.tick += 1
        if self.completion_tick is None and n and self.all_done:
            self.completion_tick = self.tick

    def _command(self, r: RobotState) -> WheelCommand:
        cfg = self.cfg
        r.blocked = False
        motion = r.agent.motion
        goal = motion.goal if motion is not None and motion.kind == "axis" else None
        if goal != r.leg_goal:
            r.leg_goal, r.leg = goal, ""
        if motion is None:
            return ZERO_COMMAND
        est = r.estimator.pose
        p = cfg.protocol
        if motion.kind == "turn":
            err = wrap_angle(motion.heading - est.theta)
            return WheelCommand(0.0, min(max(p.k_omega * err, -cfg.robot.omega_max), cfg.robot.omega_max))
        if motion.kind == "straight":
            c, s = math.cos(est.theta), math.sin(est.theta)
            along = (motion.goal[0] - est.x) * c + (motion.goal[1] - est.y) * s
            v = min(max(p.k_v * along, -NUDGE_SPEED), NUDGE_SPEED)
            cmd = WheelCommand(v, 0.0)
            remaining = abs(along) - 0.02  # no stopping margin for these short moves
        else:
            ctrl_cfg = ControllerConfig(
                v_max=cfg.robot.v_max,
                omega_max=cfg.robot.omega_max,
                epsilon_pos=p.epsilon_pos,
                heading_tol=p.heading_tol,
                k_v=p.k_v,
                k_omega=p.k_omega,
            )
            if r.leg == "x" and r.stalled_ticks * self.dt >= RECENTER_AFTER:
                r.leg = "recenter"
            out = axis_aligned_controller(est, goal, ctrl_cfg, r.leg)
            r.leg = out.axis
            cmd, remaining = out.cmd, out.axis_error
        if not p.vo_enabled or cmd.v == 0.0:
            return cmd
        return self._vo_filter(r, cmd, est.theta, remaining)

    def _vo_filter(self, r: RobotState, cmd: WheelCommand, heading: float, remaining: float) -> WheelCommand:
        """Velocity-obstacle backstop on top of the axis controller.

        The horizon is cut to the time needed to reach the current goal, since
        the robot stops there.
        """
        p = self.cfg.protocol
        combined = 2.0 * self.cfg.robot.body_radius
        obstacles = []
        for other in self.robots:
            if other is r:
                continue
            apex = (other.pose.x - r.pose.x, other.pose.y - r.pose.y)
            dist = math.hypot(*apex)
            if dist > p.vo_sensing_range or dist <= combined:
                continue
            obstacles.append(VelocityObstacle(apex, combined, other.velocity))
        if not obstacles:
            return cmd
        c, s = math.cos(heading), math.sin(heading)
        v_pref = (cmd.v * c, cmd.v * s)
        tau = min(p.vo_horizon, max(self.dt, (remaining + 0.02) / abs(cmd.v)))
        if not any(in_velocity_obstacle(v_pref, vo, tau) for vo in obstacles):
            return cmd
        chosen, blocked = select_velocity(v_pref, obstacles, self.cfg.robot.v_max, tau)
        v_along = chosen[0] * c + chosen[1] * s
        if blocked or any(in_velocity_obstacle((v_along * c, v_along * s), vo, tau) for vo in obstacles):
            v_along = 0.0
        r.blocked = True
        self.blocked_ticks += 1
        return WheelCommand(v_along, cmd.omega)

    def report(self, timeout: bool) -> RunReport:
        errors = [
            math.hypot(r.pose.x - r.agent.assignment.target[0], r.pose.y - r.agent.assignment.target[1]) for r in self.robots
        ]
        st = self.network.stats
        return RunReport(
            completed=self.all_done,
            timeout=timeout,
            completion_tick=self.completion_tick,
            ticks=self.tick,
            terminal_errors=errors,
            collisions=self.collision_events,
            messages_sent=st.sent,
            messages_lost=st.lost,
            deliveries_attempted=st.deliveries_attempted,
            sent_by_type=dict(st.sent_by_type),
            distances=[r.distance for r in self.robots],
            trace_digest=self._digest.hexdigest(),
            late_releases=sum(r.agent.late_release for r in self.robots),
            settle_retries=sum(r.agent.settle_attempts for r in self.robots),
            blocked_ticks=self.blocked_ticks,
            trace=self.trace,
        )


def run(cfg: ScenarioConfig, trace: Optional[IO[str]] = None) -> RunReport:
    """Step until every robot is done or ``max_ticks`` is reached."""
    sim = Simulation(cfg, trace)
    while sim.tick < cfg.sim.max_ticks:
        if sim.robots and sim.all_done:
            break
        sim.step()
        if not sim.robots:
            break
    timeout = not sim.all_done
    if timeout:
        log.info("timed out after %d ticks", sim.tick)
    return sim.report(timeout)


def run_to_string(cfg: ScenarioConfig) -> tuple[RunReport, str]:
    buf = io.StringIO()
    report = run(cfg, buf)
    return report, buf.getvalue()
