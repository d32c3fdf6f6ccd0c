import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmform.scenarios import prepositioned, rectangle_to_arrowhead
from swarmform.world_model import (
    Pose,
    ScenarioError,
    TargetShape,
    config_to_dict,
    dump_scenario,
    load_scenario,
    shape_centroid,
    wrap_angle,
)


def minimal_doc(n=2):
    cells = [[0.25 * i, 0.0] for i in range(n)]
    return {"initial_poses": [[c[0], -1.0, 0.0] for c in cells], "targets": cells}


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, 0.0), (math.pi, -math.pi), (3 * math.pi, -math.pi), (-math.pi, -math.pi), (math.pi / 2, math.pi / 2)],
)
def test_wrap_angle_examples(theta, expected):
    assert wrap_angle(theta) == pytest.approx(expected, abs=1e-12)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
def test_wrap_angle_range_and_idempotence(theta):
    w = wrap_angle(theta)
    assert -math.pi <= w < math.pi
    assert wrap_angle(w) == w
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-6)


def test_wrap_angle_rejects_nan():
    with pytest.raises(ValueError):
        wrap_angle(float("nan"))


def test_pose_wraps_theta():
    assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(-math.pi)


@pytest.mark.parametrize(
    "cells, expected",
    [([(0, 0), (2, 0)], (1, 0)), ([(0, 0)], (0, 0)), ([(0, 0), (1, 0), (2, 3)], (1, 1))],
)
def test_centroid_examples(cells, expected):
    assert shape_centroid(cells) == pytest.approx(expected)


def test_centroid_of_empty_shape_fails():
    with pytest.raises(ValueError):
        shape_centroid([])


@given(
    st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=30, unique=True),
    st.integers(-40, 40),
    st.integers(-40, 40),
)
def test_centroid_translation_equivariant(cells, dx, dy):
    shape = TargetShape(tuple((0.25 * x, 0.25 * y) for x, y in cells))
    moved = TargetShape(tuple((0.25 * (x + dx), 0.25 * (y + dy)) for x, y in cells))
    cx, cy = shape.centroid
    mx, my = moved.centroid
    assert mx == pytest.approx(cx + 0.25 * dx, abs=1e-9)
    assert my == pytest.approx(cy + 0.25 * dy, abs=1e-9)


def test_target_shape_invariants():
    with pytest.raises(ValueError, match="distinct"):
        TargetShape(((0.0, 0.0), (0.0, 0.0)))
    with pytest.raises(ValueError, match="grid"):
        TargetShape(((0.1, 0.0),))


def test_missing_v_max_takes_default():
    cfg = load_scenario(json.dumps(minimal_doc()))
    assert cfg.robot.v_max == 0.22
    assert cfg.robot.omega_max == 2.84


def test_zero_dt_is_rejected_by_name():
    doc = minimal_doc()
    doc["sim"] = {"dt": 0}
    with pytest.raises(ScenarioError, match="dt") as err:
        load_scenario(json.dumps(doc))
    assert err.value.path == "sim.dt"


def test_robot_cell_mismatch():
    doc = minimal_doc(36)
    doc["initial_poses"].pop()
    with pytest.raises(ScenarioError, match="robot/cell mismatch"):
        load_scenario(json.dumps(doc))


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d.update(extra=1), "extra"),
        (lambda d: d.update(robot={"speed": 1.0}), "robot.speed"),
        (lambda d: d.pop("targets"), "targets"),
        (lambda d: d.update(sensing={"estimator": "ukf"}), "sensing.estimator"),
        (lambda d: d.update(comms={"loss_probability": 1.0}), "comms.loss_probability"),
        (lambda d: d.update(sim={"max_ticks": 1.5}), "sim.max_ticks"),
        (lambda d: d.update(protocol={"vo_enabled": 1}), "protocol.vo_enabled"),
    ],
)
def test_bad_documents_name_the_field(mutate, path):
    doc = minimal_doc()
    mutate(doc)
    with pytest.raises(ScenarioError) as err:
        load_scenario(json.dumps(doc))
    assert err.value.path == path


def test_malformed_json():
    with pytest.raises(ScenarioError, match="malformed JSON"):
        load_scenario("{")


@pytest.mark.parametrize("builder", [rectangle_to_arrowhead, prepositioned])
def test_bundled_round_trip(builder):
    cfg = builder()
    assert load_scenario(dump_scenario(cfg)) == cfg


@settings(max_examples=40)
@given(
    seed=st.integers(0, 2**64 - 1),
    loss=st.floats(0.0, 0.99),
    alpha=st.floats(0.0, 1.0),
    dt=st.floats(1e-3, 0.2),
    estimator=st.sampled_from(["complementary", "ekf"]),
)
def test_scenario_round_trip(seed, loss, alpha, dt, estimator):
    cfg = load_scenario(json.dumps(minimal_doc(3))).replace(
        sim={"seed": seed, "dt": dt},
        comms={"loss_probability": loss},
        sensing={"alpha": alpha, "estimator": estimator},
    )
    again = load_scenario(dump_scenario(cfg))
    assert again == cfg
    assert config_to_dict(again) == config_to_dict(cfg)


def test_replace_validates():
    cfg = prepositioned()
    with pytest.raises(ScenarioError):
        cfg.replace(sim={"dt": -1.0})
