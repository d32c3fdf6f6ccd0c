"""SVG snapshots of a trace.

World-to-image transform: ``px = MARGIN + SCALE * (x - xmin)`` and
``py = MARGIN + SCALE * (ymax - y)`` with SCALE = 100 px per metre and
MARGIN = 20 px. The world box ``[xmin, xmax] x [ymin, ymax]`` covers the
initial poses, the target cells and both starting lines, padded by PAD metres.
It comes from the trace header, so every frame of one trace shares it.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

from .trace import TraceError, iter_trace

SCALE = 100.0
MARGIN = 20.0
PAD = 0.5

PHASE_COLORS = {
    "PHASE0_CHECK": "#7f7f7f",
    "WAIT_ROW_UNLOCK": "#bcbcbc",
    "PHASE1_TO_START": "#1f77b4",
    "STAGED_DELAY": "#ff7f0e",
    "PHASE2_TO_TARGET": "#2ca02c",
    "DONE": "#d62728",
}


class Transform:
    def __init__(self, header: dict):
        cfg = header["config"]
        self.cell = cfg["protocol"]["cell_size"]
        self.radius = cfg["robot"]["body_radius"]
        xs = [p[0] for p in cfg["initial_poses"]] + [c[0] for c in cfg["targets"]]
        ys = [p[1] for p in cfg["initial_poses"]] + [c[1] for c in cfg["targets"]]
        self.lines = tuple(header.get("start_lines", ()))
        xs += list(self.lines)
        if not ys:
            xs, ys = [0.0], [0.0]
        self.xmin, self.xmax = min(xs) - PAD, max(xs) + PAD
        self.ymin, self.ymax = min(ys) - PAD, max(ys) + PAD
        self.width = 2 * MARGIN + SCALE * (self.xmax - self.xmin)
        self.height = 2 * MARGIN + SCALE * (self.ymax - self.ymin)

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return MARGIN + SCALE * (x - self.xmin), MARGIN + SCALE * (self.ymax - y)


def frame_svg(header: dict, tick: int, events: list[dict]) -> str:
    tf = Transform(header)
    h = tf.cell / 2
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{tf.width:.1f}" height="{tf.height:.1f}" '
        f'viewBox="0 0 {tf.width:.1f} {tf.height:.1f}">',
        f'<rect width="{tf.width:.1f}" height="{tf.height:.1f}" fill="white"/>',
        f'<text x="{MARGIN:.1f}" y="{MARGIN * 0.75:.1f}" font-size="12" font-family="sans-serif">tick {tick}</text>',
    ]
    for cx, cy in header["config"]["targets"]:
        x0, y0 = tf(cx - h, cy + h)
        side = SCALE * tf.cell
        out.append(f'<rect class="target" x="{x0:.2f}" y="{y0:.2f}" width="{side:.2f}" height="{side:.2f}" fill="none" stroke="#444" stroke-width="1"/>')
    for lx in tf.lines:
        x, top = tf(lx, tf.ymax)
        _, bottom = tf(lx, tf.ymin)
        out.append(f'<line class="start-line" x1="{x:.2f}" y1="{top:.2f}" x2="{x:.2f}" y2="{bottom:.2f}" stroke="#888" stroke-dasharray="6,4"/>')
    for e in events:
        x, y = tf(e["true"][0], e["true"][1])
        color = PHASE_COLORS.get(e["phase"], "#000000")
        out.append(
            f'<circle class="robot" data-robot="{e["robot"]}" data-phase="{e["phase"]}" cx="{x:.2f}" cy="{y:.2f}" '
            f'r="{SCALE * tf.radius:.2f}" fill="{color}" stroke="black" stroke-width="0.5"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def frame_ticks(last_tick: int, stride: int) -> list[int]:
    """0, stride, 2*stride, ... plus the last tick if the stride skips it."""
    ticks = list(range(0, last_tick + 1, stride))
    if ticks[-1] != last_tick:
        ticks.append(last_tick)
    return ticks


def render_trace(source, out_dir: Path, stride: int, force: bool = False) -> list[Path]:
    """Write one SVG per frame tick into ``out_dir``; returns the paths written.

    The trace is streamed, so only the frames being kept are held in memory.
    """
    if stride <= 0:
        raise ValueError("stride must be positive")
    records = iter_trace(source)
    _, header = next(records)
    frames: dict[int, list[dict]] = {}
    current: Optional[int] = None
    current_events: list[dict] = []
    for line_no, e in records:
        tick = e["tick"]
        if tick != current:
            if current is not None and tick < current:
                raise TraceError(line_no, "ticks out of order")
            if current is not None and current % stride == 0:
                frames[current] = current_events
            current, current_events = tick, []
        current_events.append(e)
    if current is None:
        raise TraceError(1, "trace has no events")
    frames[current] = current_events

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {tick: out_dir / f"frame_{tick:06d}.svg" for tick in frame_ticks(current, stride)}
    if not force:
        for path in paths.values():
            if path.exists():
                raise FileExistsError(str(path))
    for tick, path in paths.items():
        path.write_text(frame_svg(header, tick, frames[tick]), encoding="utf-8")
    return list(paths.values())


def robots_inside_targets(header: dict, events: Iterable[dict]) -> bool:
    """Every robot centre lies inside some target cell outline."""
    h = header["config"]["protocol"]["cell_size"] / 2
    cells = header["config"]["targets"]
    return all(any(abs(e["true"][0] - cx) <= h and abs(e["true"][1] - cy) <= h for cx, cy in cells) for e in events)
