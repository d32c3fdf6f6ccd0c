import io
import re

import pytest

from swarmform.render import MARGIN, SCALE, Transform, frame_svg, frame_ticks, render_trace, robots_inside_targets
from swarmform.scenarios import prepositioned
from swarmform.sim_engine import TraceEvent, run_to_string
from swarmform.trace import TraceError, iter_trace, read_trace, sent_counts
from swarmform.world_model import Pose, ScenarioConfig, TargetShape


def synthetic_trace(last_tick=1000):
    cfg = ScenarioConfig(initial_poses=(Pose(-1.0, -1.0, 0.0),), shape=TargetShape(((0.0, 0.0),)))
    _, text = run_to_string(cfg.replace(sim={"max_ticks": 1}))
    header = text.splitlines()[0]
    lines = [header]
    for tick in range(last_tick + 1):
        f = tick / last_tick
        pose = (-1.0 + f, -1.0 + f, 0.0)
        phase = "DONE" if tick == last_tick else "PHASE1_TO_START"
        ev = TraceEvent(tick, 0, pose, pose, phase, (0.0, 0.0), [], [], False, False)
        lines.append(ev.to_json())
    return "\n".join(lines) + "\n"


def test_frame_ticks():
    assert frame_ticks(1000, 200) == [0, 200, 400, 600, 800, 1000]
    assert frame_ticks(999, 200) == [0, 200, 400, 600, 800, 999]
    assert frame_ticks(0, 5) == [0]


def test_render_stride(tmp_path):
    src = tmp_path / "trace.jsonl"
    src.write_text(synthetic_trace())
    written = render_trace(src, tmp_path / "frames", 200)
    assert [p.name for p in written] == [f"frame_{t:06d}.svg" for t in range(0, 1001, 200)]
    with pytest.raises(FileExistsError):
        render_trace(src, tmp_path / "frames", 200)
    assert len(render_trace(src, tmp_path / "frames", 200, force=True)) == 6


def test_frame_contents(tmp_path):
    header, events = read_trace(io.StringIO(synthetic_trace(10)))
    svg = frame_svg(header, 10, [e for e in events if e["tick"] == 10])
    assert svg.count('class="robot"') == 1
    assert svg.count('class="target"') == 1
    assert svg.count('class="start-line"') == 2 and 'stroke-dasharray="6,4"' in svg
    assert 'data-phase="DONE"' in svg


def test_transform_is_fixed_scale():
    header, _ = read_trace(io.StringIO(synthetic_trace(2)))
    tf = Transform(header)
    x0, y0 = tf(tf.xmin, tf.ymax)
    assert (x0, y0) == (MARGIN, MARGIN)
    x1, y1 = tf(tf.xmin + 1.0, tf.ymax - 1.0)
    assert (x1 - x0, y1 - y0) == (SCALE, SCALE)


@pytest.mark.parametrize(
    "text, line",
    [
        ('{"type":"header","config":{}}\n{"tick":0\n', 2),
        ('{"tick":0}\n', 1),
        ('{"type":"header"}\n[1,2]\n', 2),
        ('{"type":"header"}\n{"tick":0,"robot":0}\n', 2),
        ('{"type":"header"}\n\n', 2),
    ],
)
def test_malformed_lines_report_line_number(text, line):
    with pytest.raises(TraceError) as err:
        list(iter_trace(io.StringIO(text)))
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_empty_trace():
    with pytest.raises(TraceError, match="empty"):
        list(iter_trace(io.StringIO("")))


def test_prepositioned_message_counts_and_final_frame():
    _, text = run_to_string(prepositioned())
    header, events = read_trace(io.StringIO(text))
    assert sent_counts(events) == {"OCCUPIED": 36, "ROW_ROBOT_DONE": 36}
    assert robots_inside_targets(header, events)
