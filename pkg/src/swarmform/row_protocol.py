"""Row-based shape filling: planning, wire messages and the per-robot state machine.

Targets are split into a LEFT and a RIGHT half around the shape centroid and
each half is cut, centre-out, into rows of ``k`` cells. RIGHT rows get odd
numbers and LEFT rows even ones, so the two halves fill in parallel from
opposite edges. Row ``n`` may only leave once row ``n - 2`` has reported
completion with ``ROW_MOVING``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .world_model import TargetShape, wrap_angle


class Side(enum.Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"


def side_of_row(n: int) -> Side:
    return Side.RIGHT if n % 2 == 1 else Side.LEFT


def robot_name(robot_id: int) -> str:
    return f"r{robot_id}"


@dataclass(frozen=True)
class Assignment:
    robot_id: int
    target: tuple[float, float]
    row: int
    side: Side
    order: int
    start_point: tuple[float, float]
    # where the robot waits for release: the start point, moved outward along
    # the same line by one slot per earlier robot of the row sharing it
    staging_point: tuple[float, float]


# -- messages ---------------------------------------------------------------


@dataclass(frozen=True)
class Occupied:
    x: float
    y: float
    robot_id: int


@dataclass(frozen=True)
class RowRobotDone:
    row: int
    name: str


@dataclass(frozen=True)
class RowMoving:
    row: int
    unlock_tick: int  # tick of the first ROW_MOVING for this row; resends repeat it


@dataclass(frozen=True)
class Claim:
    x: float
    y: float
    robot_id: int


ProtocolMessage = Occupied | RowRobotDone | RowMoving | Claim

# terminal positioning: how far off an axis the heading may be for a straight
# correction, and when a straight correction counts as done
AXIS_TOL = 0.1
NUDGE_TOL = 0.003
NUDGE_SPEED = 0.05
NUDGE_TIMEOUT = 4.0  # seconds; a blocked correction gives up and re-measures

_TAGS = {Occupied: "OCCUPIED", RowRobotDone: "ROW_ROBOT_DONE", RowMoving: "ROW_MOVING", Claim: "CLAIM"}


class MalformedMessage(ValueError):
    pass


def encode_message(msg) -> str:
    if isinstance(msg, (Occupied, Claim)):
        return f"{_TAGS[type(msg)]}|{msg.x:.4f}|{msg.y:.4f}|{msg.robot_id}"
    if isinstance(msg, RowRobotDone):
        return f"ROW_ROBOT_DONE|{msg.row}|{msg.name}"
    if isinstance(msg, RowMoving):
        return f"ROW_MOVING|{msg.row}|{msg.unlock_tick}"
    raise MalformedMessage(f"not a protocol message: {msg!r}")


def decode_message(text: str):
    parts = text.split("|")
    try:
        tag = parts[0]
        if tag in ("OCCUPIED", "CLAIM") and len(parts) == 4:
            cls = Occupied if tag == "OCCUPIED" else Claim
            return cls(float(parts[1]), float(parts[2]), int(parts[3]))
        if tag == "ROW_ROBOT_DONE" and len(parts) == 3 and parts[2]:
            return RowRobotDone(int(parts[1]), parts[2])
        if tag == "ROW_MOVING" and len(parts) == 3:
            return RowMoving(int(parts[1]), int(parts[2]))
    except ValueError:
        pass
    raise MalformedMessage(f"cannot decode {text!r}")


def is_well_formed(msg) -> bool:
    if isinstance(msg, RowRobotDone):
        return isinstance(msg.row, int) and msg.row >= 1 and isinstance(msg.name, str) and bool(msg.name)
    if isinstance(msg, RowMoving):
        return isinstance(msg.row, int) and msg.row >= 1 and isinstance(msg.unlock_tick, int)
    if isinstance(msg, (Occupied, Claim)):
        return all(isinstance(v, (int, float)) and math.isfinite(v) for v in (msg.x, msg.y))
    return False


# -- planning ---------------------------------------------------------------


def starting_lines(shape: TargetShape, offset: float = 0.25) -> tuple[float, float]:
    """(x_right, x_left): vertical starting lines just outside the shape."""
    if len(shape) == 0:
        raise ValueError("empty shape")
    xs = shape.as_array()[:, 0]
    return float(xs.max() + offset), float(xs.min() - offset)


def cell_key(xy) -> tuple[float, float]:
    return (round(float(xy[0]), 4), round(float(xy[1]), 4))


def partition_rows(shape: TargetShape, k: int) -> dict[int, list[tuple[float, float]]]:
    """Row number -> its cells in centre-out order."""
    cx, cy = shape.centroid
    halves = {Side.RIGHT: [], Side.LEFT: []}
    for x, y in shape.cells:
        halves[Side.RIGHT if x >= cx else Side.LEFT].append((x, y))
    rows = {}
    for side, first_row in ((Side.RIGHT, 1), (Side.LEFT, 2)):
        ordered = sorted(halves[side], key=lambda c: (math.hypot(c[0] - cx, c[1] - cy), c[1], c[0]))
        for i in range(0, len(ordered), k):
            rows[first_row + 2 * (i // k)] = ordered[i : i + k]
    return dict(sorted(rows.items()))


def partition_and_assign(
    shape: TargetShape,
    robot_positions: Sequence[Sequence[float]],
    k: int = 6,
    start_offset: float = 0.25,
    staging_gap: float = 0.35,
    seated_tol: float = 0.05,
) -> list[Assignment]:
    """Plan rows and match robots to targets. Returned list is indexed by robot id.

    A robot already within ``seated_tol`` of a cell keeps that cell, so a
    pre-positioned robot finishes on its own target in the first check.
    Rows are served in increasing number. Each target of a row, in centre-out
    order, takes the nearest free robot standing on the row's side of the
    centroid (any free robot once that side runs out; ties to the lower id).
    That fixes which robots serve the row. Inside the row the chosen robots
    are re-paired monotonically: robots ranked by (distance outward from the
    centroid, y) take targets ranked by y, so the Y-then-X legs of robots
    leaving together do not cross. Targets sharing a y value go to their
    robots by path length, so the robot bound for the inner cell reaches the
    shared start point first.
    """
    positions = np.asarray(robot_positions, dtype=float).reshape(-1, 2)
    if len(positions) != len(shape):
        raise ValueError(f"{len(positions)} robots for {len(shape)} target cells")
    if k < 1:
        raise ValueError("row size must be >= 1")
    if len(positions) == 0:
        return []
    cx = shape.centroid[0]
    x_right, x_left = starting_lines(shape, start_offset)
    seated: dict[tuple[float, float], int] = {}
    for c in shape.cells:
        d = np.hypot(*(positions - np.asarray(c)).T)
        for i in np.argsort(d, kind="stable"):
            if d[i] > seated_tol:
                break
            if int(i) not in seated.values():
                seated[cell_key(c)] = int(i)
                break
    free = {Side.RIGHT: set(), Side.LEFT: set()}
    for i, (x, _) in enumerate(positions):
        if i not in seated.values():
            free[Side.RIGHT if x >= cx else Side.LEFT].add(i)
    out: dict[int, Assignment] = {}
    for n, cells in partition_rows(shape, k).items():
        side = side_of_row(n)
        x_start = x_right if side is Side.RIGHT else x_left
        other = Side.LEFT if side is Side.RIGHT else Side.RIGHT
        pairs = {o: seated[cell_key(c)] for o, c in enumerate(cells) if cell_key(c) in seated}
        open_orders = [o for o in range(len(cells)) if o not in pairs]
        chosen = []
        for o in open_orders:
            pool = free[side] or free[other]
            rid = min(pool, key=lambda i: (math.hypot(*(positions[i] - cells[o])), i))
            pool.remove(rid)
            chosen.append(rid)
        chosen.sort(key=lambda i: (round(abs(positions[i][0] - cx), 6), positions[i][1], i))
        ranked = sorted(open_orders, key=lambda o: (cells[o][1], o))
        pairs.update(zip(ranked, chosen))
        by_y: dict[float, list[int]] = {}
        for o in open_orders:
            by_y.setdefault(cell_key(cells[o])[1], []).append(o)
        for orders in by_y.values():
            if len(orders) < 2:
                continue
            y = cells[orders[0]][1]
            robots = sorted(
                (pairs[o] for o in orders),
                key=lambda i: (abs(positions[i][1] - y) + abs(positions[i][0] - x_start), i),
            )
            pairs.update(zip(orders, robots))
        outward = 1.0 if side is Side.RIGHT else -1.0
        for order, rid in pairs.items():
            target = cells[order]
            slot = sum(1 for o in range(order) if cell_key(cells[o])[1] == cell_key(target)[1])
            out[rid] = Assignment(
                robot_id=rid,
                target=target,
                row=n,
                side=side,
                order=order,
                start_point=(x_start, target[1]),
                staging_point=(x_start + outward * slot * staging_gap, target[1]),
            )
    return [out[i] for i in range(len(positions))]


def row_sizes(plan: Sequence[Assignment]) -> dict[int, int]:
    sizes: dict[int, int] = {}
    for a in plan:
        sizes[a.row] = sizes.get(a.row, 0) + 1
    return sizes


def staggered_delay(order: int, base: float = 1.0, step: float = 3.0) -> float:
    if order < 0:
        raise ValueError("order must be non-negative")
    return base + step * order


def phase0_check(est_xy, cells: Sequence[Sequence[float]], epsilon_pos: float) -> Optional[tuple[float, float]]:
    """Nearest target cell within ``epsilon_pos`` of the estimate, if any."""
    best, best_d = None, math.inf
    for c in cells:
        d = math.hypot(est_xy[0] - c[0], est_xy[1] - c[1])
        if d <= epsilon_pos and d < best_d:
            best, best_d = (float(c[0]), float(c[1])), d
    return best


# -- per-robot state machine --------------------------------------------------


class Phase(enum.IntEnum):
    PHASE0_CHECK = 0
    WAIT_ROW_UNLOCK = 1
    PHASE1_TO_START = 2
    STAGED_DELAY = 3
    PHASE2_TO_TARGET = 4
    DONE = 5


@dataclass
class RobotProtocolState:
    robot_id: int
    assignment: Assignment
    phase: Phase = Phase.PHASE0_CHECK
    completed_robots: dict[int, set] = field(default_factory=dict)
    can_my_row_move: bool = False
    row_start_broadcast: bool = False
    arrival_order: Optional[int] = None
    delay_deadline: Optional[float] = None
    # bookkeeping beyond the core row and phase state
    unlock_tick: Optional[int] = None
    first_row_moving_tick: Optional[int] = None
    heard_own_row_moving: bool = False
    done_tick: Optional[int] = None
    next_check_tick: Optional[int] = None
    occupied: dict = field(default_factory=dict)  # cell -> robot id
    claims: dict = field(default_factory=dict)  # cell -> lowest claiming robot id
    claims_from: set = field(default_factory=set)
    lost_claim: bool = False
    conflicts: int = 0
    malformed: int = 0

    @property
    def name(self) -> str:
        return robot_name(self.robot_id)

    @property
    def row(self) -> int:
        return self.assignment.row


def row_gate(state: RobotProtocolState, row: Optional[int] = None) -> bool:
    n = state.row if row is None else row
    return n <= 2 or state.can_my_row_move


def handle_message(state: RobotProtocolState, msg, plan: Sequence[Assignment] | None = None) -> list:
    """Apply one received message; returns messages to send in reply (currently none)."""
    if not is_well_formed(msg):
        state.malformed += 1
        return []
    if isinstance(msg, RowRobotDone):
        state.completed_robots.setdefault(msg.row, set()).add(msg.name)
    elif isinstance(msg, RowMoving):
        state.completed_robots.setdefault(msg.row, set())
        if msg.row == state.row:
            state.heard_own_row_moving = True
        if msg.row + 2 == state.row and not state.can_my_row_move:
            state.can_my_row_move = True
            state.unlock_tick = msg.unlock_tick
    elif isinstance(msg, Occupied):
        key = cell_key((msg.x, msg.y))
        prev = state.occupied.get(key)
        if prev is not None and prev != msg.robot_id:
            state.conflicts += 1
        state.occupied.setdefault(key, msg.robot_id)
        if key == cell_key(state.assignment.target) and msg.robot_id != state.robot_id:
            state.conflicts += 1
    elif isinstance(msg, Claim):
        key = cell_key((msg.x, msg.y))
        holder = state.claims.get(key)
        if holder is None or msg.robot_id < holder:
            state.claims[key] = msg.robot_id
        if key == cell_key(state.assignment.target) and msg.robot_id < state.robot_id:
            # the lower id keeps the cell; this robot would go back to the planner
            state.lost_claim = True
            state.conflicts += 1
        if plan is not None and 0 <= msg.robot_id < len(plan) and plan[msg.robot_id].row == state.row + 2:
            state.claims_from.add(msg.robot_id)
    return []


def is_last_in_row(state: RobotProtocolState, sizes: dict[int, int]) -> bool:
    return state.assignment.order == sizes[state.row] - 1


def completion_tick(
    state: RobotProtocolState,
    tick: int,
    row_size: int,
    reverify_ticks: int,
    next_row_size: int = 0,
) -> list:
    """Periodic completion check run by the last robot of a row once it is done.

    Sends ``ROW_MOVING`` when every robot of the row has reported. While the
    row two further on has not been heard claiming in full, the broadcast flag
    is cleared at each check so the unlock is repeated for lossy links.
    """
    if state.phase is not Phase.DONE or state.next_check_tick is None or tick < state.next_check_tick:
        return []
    state.next_check_tick = tick + reverify_ticks
    out = []
    if state.row_start_broadcast and len(state.claims_from) < next_row_size:
        state.row_start_broadcast = False
    if not state.row_start_broadcast and len(state.completed_robots.get(state.row, ())) >= row_size:
        if state.first_row_moving_tick is None:
            state.first_row_moving_tick = tick
        out.append(RowMoving(state.row, state.first_row_moving_tick))
        state.row_start_broadcast = True
        state.heard_own_row_moving = True
    return out


# -- agent driving one robot through the phases -------------------------------


@dataclass(frozen=True)
class AgentTiming:
    dt: float = 0.05
    epsilon_pos: float = 0.05
    reverify_period: float = 1.0
    delay_base: float = 1.0
    delay_step: float = 3.0
    settle_time: float = 6.0
    settle_tol: float = 0.02
    max_settle_attempts: int = 30
    heading_tol: float = 0.05

    def ticks(self, seconds: float) -> int:
        return int(round(seconds / self.dt))


def stage_budget_ticks(
    plan: Sequence[Assignment],
    positions: Sequence[Sequence[float]],
    v_max: float,
    slack: float,
    dt: float,
    turn_allowance: float = 2.0,
) -> dict[int, int]:
    """Per-row time allowed for reaching the start points, rounded up to whole seconds.

    Departures from the starting line are counted from a common reference (the
    row unlock) plus this budget, so the spacing between robots of a row is
    exact regardless of who reached the line first.
    """
    worst: dict[int, float] = {}
    for a in plan:
        p = positions[a.robot_id]
        l1 = abs(p[1] - a.staging_point[1]) + abs(p[0] - a.staging_point[0])
        need = slack * l1 / v_max + 3 * turn_allowance
        worst[a.row] = max(worst.get(a.row, 0.0), need)
    return {n: int(round(math.ceil(t) / dt)) for n, t in worst.items()}


@dataclass(frozen=True)
class Motion:
    """What the agent wants from the drive this tick.

    ``axis``: axis-aligned navigation to ``goal``. ``turn``: rotate in place to
    ``heading``. ``straight``: drive forward or backward along the current
    heading, without turning, until ``goal`` is abeam.
    """

    kind: str
    goal: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0


class RowAgent:
    """Protocol logic for one robot. ``decide`` runs once per tick.

    After ``decide`` the engine reads ``motion`` (None means hold still) and
    ``gps_suspended``, and consumes ``rebase_request``.

    Terminal positioning: after reaching its target on the running estimate
    the robot parks and averages raw GPS fixes for ``settle_time``. If the
    mean is within ``settle_tol`` it is done. Otherwise it corrects one axis
    at a time. Turning in place adds odometry error proportional to the
    angle, so turns are made with GPS fusion on and always followed by a
    fresh average; the correcting move itself is a short straight drive on
    odometry alone, starting from the averaged position.
    """

    def __init__(
        self,
        assignment: Assignment,
        plan: Sequence[Assignment],
        cells: Sequence[tuple[float, float]],
        timing: AgentTiming,
        budget_ticks: dict[int, int],
    ):
        self.state = RobotProtocolState(assignment.robot_id, assignment)
        self.plan = plan
        self.cells = cells
        self.timing = timing
        self.sizes = row_sizes(plan)
        self.budget_ticks = budget_ticks
        self.release_tick: Optional[int] = None
        self.phase1_tick: Optional[int] = None
        self.start_arrival_tick: Optional[int] = None
        self.released_tick: Optional[int] = None
        self.late_release = False
        self.terminal: Optional[str] = None  # None, "settle", "turn" or "nudge"
        self.terminal_motion: Optional[Motion] = None
        self.settle_start: Optional[int] = None
        self.nudge_start: Optional[int] = None
        self.avoid_axis: Optional[str] = None
        self.attempts_here = 0
        self.settle_fixes: list[tuple[float, float]] = []
        self.settle_attempts = 0
        self.rebase_request: Optional[tuple[float, float]] = None
        self.next_done_resend: Optional[int] = None
        self.transitions: list[tuple[str, str]] = []

    @property
    def phase(self) -> Phase:
        return self.state.phase

    @property
    def assignment(self) -> Assignment:
        return self.state.assignment

    @property
    def is_last(self) -> bool:
        return is_last_in_row(self.state, self.sizes)

    @property
    def motion(self) -> Optional[Motion]:
        if self.phase is Phase.PHASE1_TO_START:
            return Motion("axis", self.assignment.staging_point)
        if self.phase in (Phase.STAGED_DELAY, Phase.PHASE2_TO_TARGET):
            if self.terminal is None:
                goal = self.assignment.target if self.phase is Phase.PHASE2_TO_TARGET else self.assignment.staging_point
                return Motion("axis", goal)
            if self.terminal in ("turn", "nudge"):
                return self.terminal_motion
        return None

    @property
    def gps_suspended(self) -> bool:
        return self.terminal == "nudge" and self.phase in (Phase.STAGED_DELAY, Phase.PHASE2_TO_TARGET)

    def receive(self, msg) -> None:
        handle_message(self.state, msg, self.plan)

    def _set_phase(self, phase: Phase) -> None:
        self.transitions.append((self.state.phase.name, phase.name))
        self.state.phase = phase

    def _finish(self, tick: int) -> list:
        s = self.state
        self._set_phase(Phase.DONE)
        s.done_tick = tick
        s.completed_robots.setdefault(s.row, set()).add(s.name)
        s.next_check_tick = tick
        if self.is_last:
            s.heard_own_row_moving = True  # nobody else needs this robot's report
        self.next_done_resend = tick + self.timing.ticks(self.timing.reverify_period)
        tx, ty = self.assignment.target
        return [Occupied(tx, ty, s.robot_id), RowRobotDone(s.row, s.name)]

    def _within(self, est_xy, goal, tol) -> bool:
        return abs(goal[0] - est_xy[0]) <= tol and abs(goal[1] - est_xy[1]) <= tol

    def decide(self, tick: int, est_xy, fix=None, heading: float = 0.0) -> list:
        s = self.state
        t = self.timing
        out: list = []
        target_key = cell_key(self.assignment.target)

        if s.phase is Phase.PHASE0_CHECK:
            match = phase0_check(est_xy, self.cells, t.epsilon_pos)
            if match is not None and cell_key(match) == target_key:
                return self._finish(tick)
            self._set_phase(Phase.WAIT_ROW_UNLOCK)

        if s.phase is Phase.WAIT_ROW_UNLOCK and row_gate(s):
            self._set_phase(Phase.PHASE1_TO_START)
            self.phase1_tick = tick
            ref = 0 if s.row <= 2 else s.unlock_tick
            s.arrival_order = self.assignment.order
            self.release_tick = (
                ref + self.budget_ticks[s.row] + t.ticks(staggered_delay(s.arrival_order, t.delay_base, t.delay_step))
            )
            s.delay_deadline = self.release_tick * t.dt
            tx, ty = self.assignment.target
            out.append(Claim(tx, ty, s.robot_id))

        if s.phase is Phase.PHASE1_TO_START and self._within(est_xy, self.assignment.staging_point, t.epsilon_pos):
            self._set_phase(Phase.STAGED_DELAY)
            self.start_arrival_tick = tick
            self._reset_terminal()
            self._start_settle(tick)
            if tick > self.release_tick:
                self.late_release = True

        if s.phase is Phase.STAGED_DELAY:
            if tick >= self.release_tick:
                match = phase0_check(est_xy, self.cells, t.epsilon_pos)
                if match is not None and cell_key(match) == target_key:
                    return out + self._finish(tick)
                self._set_phase(Phase.PHASE2_TO_TARGET)
                self.released_tick = tick
                self._reset_terminal()
            elif self.terminal != "parked":
                # use the wait to pin down the staging point, so the final
                # straight run starts on the right line
                if self._terminal_step(tick, est_xy, fix, heading, self.assignment.staging_point):
                    self.terminal = "parked"
                    self.terminal_motion = None

        if s.phase is Phase.PHASE2_TO_TARGET:
            if self._terminal_step(tick, est_xy, fix, heading, self.assignment.target):
                return out + self._finish(tick)
            return out

        if s.phase is Phase.DONE:
            if not s.heard_own_row_moving and tick >= self.next_done_resend:
                out.append(RowRobotDone(s.row, s.name))
                self.next_done_resend = tick + t.ticks(t.reverify_period)
            if self.is_last:
                nxt = self.sizes.get(s.row + 2, 0)
                out.extend(completion_tick(s, tick, self.sizes[s.row], t.ticks(t.reverify_period), nxt))
        return out

    def _start_settle(self, tick: int) -> None:
        self.terminal = "settle"
        self.terminal_motion = None
        self.settle_start = tick
        self.settle_fixes = []

    def _reset_terminal(self) -> None:
        self.terminal = None
        self.terminal_motion = None
        self.avoid_axis = None
        self.attempts_here = 0

    def _terminal_step(self, tick: int, est_xy, fix, heading: float, goal) -> bool:
        """Advance the park-measure-correct loop towards ``goal``; True once accepted."""
        t = self.timing
        if self.terminal is None:
            if self._within(est_xy, goal, t.epsilon_pos):
                self._start_settle(tick)
            return False
        if self.terminal == "settle":
            if fix is not None:
                self.settle_fixes.append((fix.x, fix.y))
            if tick - self.settle_start >= t.ticks(t.settle_time):
                return self._settle_verdict(tick, heading, goal)
            return False
        m = self.terminal_motion
        if self.terminal == "turn":
            if abs(wrap_angle(m.heading - heading)) <= t.heading_tol:
                self._start_settle(tick)
        elif self.terminal == "nudge":
            c, s_ = math.cos(heading), math.sin(heading)
            along = (m.goal[0] - est_xy[0]) * c + (m.goal[1] - est_xy[1]) * s_
            if abs(along) <= NUDGE_TOL:
                self._start_settle(tick)
            elif tick - self.nudge_start >= t.ticks(NUDGE_TIMEOUT):
                # probably blocked by a neighbour; fix the other axis first
                self.avoid_axis = "x" if abs(c) > abs(s_) else "y"
                self._start_settle(tick)
        return False

    def _settle_verdict(self, tick: int, heading: float, goal) -> bool:
        """Average the fixes taken while parked; accept, or start one correction."""
        t = self.timing
        if not self.settle_fixes:
            return True
        mx, my = (float(v) for v in np.mean(np.asarray(self.settle_fixes), axis=0))
        tx, ty = goal
        self.attempts_here += 1
        self.settle_attempts += 1
        if math.hypot(mx - tx, my - ty) <= t.settle_tol or self.attempts_here >= t.max_settle_attempts:
            return True
        self.rebase_request = (mx, my)
        ex, ey = tx - mx, ty - my
        half = t.settle_tol / 2
        avoid, self.avoid_axis = self.avoid_axis, None
        # an axis is usable if the robot already points along it, either way
        along_x = abs(math.sin(heading)) <= math.sin(AXIS_TOL)
        along_y = abs(math.cos(heading)) <= math.sin(AXIS_TOL)
        need_x, need_y = abs(ex) > half, abs(ey) > half
        if avoid == "x" and need_y:
            need_x = False
        if avoid == "y" and need_x:
            need_y = False
        if (along_x and need_x) or (along_y and need_y):
            self.terminal = "nudge"
            self.terminal_motion = Motion("straight", (tx, my) if along_x else (mx, ty))
            self.nudge_start = tick
            return False
        if need_x and (abs(ex) >= abs(ey) or not need_y):
            want = 0.0 if abs(wrap_angle(heading)) <= math.pi / 2 else -math.pi
        else:
            want = math.pi / 2 if math.sin(heading) >= 0 else -math.pi / 2
        self.terminal = "turn"
        self.terminal_motion = Motion("turn", heading=want)
        return False
