"""Communication graph and lossy broadcast channels with one-tick latency."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


class Channel(enum.Enum):
    GLOBAL = "GLOBAL"
    LOCAL = "LOCAL"


@dataclass(frozen=True)
class Envelope:
    sender: int
    channel: Channel
    payload: Any
    sent_tick: int
    seq: int = 0


@dataclass(frozen=True)
class CommGraph:
    n: int
    edges: frozenset  # of (i, j) with i < j

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i: int) -> list[int]:
        return [j for j in range(self.n) if self.has_edge(i, j)]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    @property
    def max_degree(self) -> int:
        return max((self.degree(i) for i in range(self.n)), default=0)


def build_graph(positions: Sequence[Sequence[float]], r_comm: float) -> CommGraph:
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise ValueError("positions must be finite")
    n = len(pts)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if math.isinf(r_comm) or math.hypot(*(pts[i] - pts[j])) <= r_comm:
                edges.add((i, j))
    return CommGraph(n, frozenset(edges))


@dataclass
class NetworkStats:
    sent: int = 0  # broadcasts issued
    deliveries_attempted: int = 0
    lost: int = 0
    sent_by_type: dict = field(default_factory=dict)


class Network:
    """Message queue owned by the engine.

    Loss is drawn independently per (envelope, recipient). Surviving copies
    become visible at ``sent_tick + 1`` and are handed out in (sender, seq)
    order.
    """

    def __init__(self, n_robots: int, r_comm_local: float, loss_probability: float, rng: np.random.Generator):
        if not 0.0 <= loss_probability < 1.0:
            raise ValueError("loss_probability must lie in [0, 1)")
        self.n = n_robots
        self.r_comm_local = r_comm_local
        self.loss_probability = loss_probability
        self.rng = rng
        self.stats = NetworkStats()
        self._seq = [0] * n_robots
        self._pending: list[tuple[int, Envelope, int]] = []  # (deliver_tick, env, recipient)

    def next_seq(self, sender: int) -> int:
        seq = self._seq[sender]
        self._seq[sender] += 1
        return seq

    def broadcast(self, env: Envelope, positions: Sequence[Sequence[float]]) -> list[int]:
        if env.channel is Channel.GLOBAL:
            candidates = [j for j in range(self.n) if j != env.sender]
        else:
            graph = build_graph(positions, self.r_comm_local)
            candidates = graph.neighbors(env.sender)
        self.stats.sent += 1
        kind = type(env.payload).__name__
        self.stats.sent_by_type[kind] = self.stats.sent_by_type.get(kind, 0) + 1
        recipients = []
        draws = self.rng.random(len(candidates))
        for j, u in zip(candidates, draws):
            self.stats.deliveries_attempted += 1
            if u < self.loss_probability:
                self.stats.lost += 1
                continue
            recipients.append(j)
            self._pending.append((env.sent_tick + 1, env, j))
        return recipients

    def deliver(self, tick: int) -> dict[int, list[Envelope]]:
        """Pop every message due at or before ``tick``, grouped by recipient."""
        due = [p for p in self._pending if p[0] <= tick]
        self._pending = [p for p in self._pending if p[0] > tick]
        due.sort(key=lambda p: (p[1].sender, p[1].seq, p[2]))
        inbox: dict[int, list[Envelope]] = {}
        for _, env, recipient in due:
            inbox.setdefault(recipient, []).append(env)
        return inbox

    @property
    def pending_count(self) -> int:
        return len(self._pending)
