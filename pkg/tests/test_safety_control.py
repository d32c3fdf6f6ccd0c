import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_connected_graph, sampled_min_distance

from swarmform.network import CommGraph, build_graph
from swarmform.safety_control import (
    ConsensusStepWarning,
    PdGains,
    VelocityObstacle,
    candidate_velocities,
    consensus_step,
    in_velocity_obstacle,
    min_distance_within,
    pd_control,
    select_velocity,
)


def test_vo_examples():
    vo = VelocityObstacle((1.0, 0.0), 0.2)
    assert in_velocity_obstacle((1.0, 0.0), vo, 5.0)
    assert not in_velocity_obstacle((0.0, 1.0), vo, 5.0)
    moving = VelocityObstacle((1.0, 0.0), 0.2, (0.3, 0.1))
    assert not in_velocity_obstacle((0.3, 0.1), moving, 5.0)


def test_vo_rejects_bad_arguments():
    with pytest.raises(ValueError):
        VelocityObstacle((1, 0), 0.0)
    with pytest.raises(ValueError):
        in_velocity_obstacle((0, 0), VelocityObstacle((1, 0), 0.2), 0.0)


@settings(max_examples=200)
@given(
    st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3)),
    st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3)),
    st.floats(0.05, 5.0),
)
def test_closed_form_min_distance_matches_sampling(apex, obst_vel, v, tau):
    vo = VelocityObstacle(apex, 0.16, obst_vel)
    exact = min_distance_within(vo, v, tau)
    sampled = sampled_min_distance(apex, obst_vel, v, tau)
    assert exact <= sampled + 1e-12
    speed = math.hypot(obst_vel[0] - v[0], obst_vel[1] - v[1])
    assert sampled - exact <= speed * tau / 10_000 + 1e-12


def test_select_without_obstacles_returns_preference():
    assert select_velocity((0.1, -0.05), [], 0.22, 5.0) == ((0.1, -0.05), False)


def test_select_avoids_obstacle_dead_ahead():
    vo = VelocityObstacle((0.5, 0.0), 0.16)
    v_pref = (0.22, 0.0)
    chosen, blocked = select_velocity(v_pref, [vo], 0.22, 5.0)
    assert not blocked and not in_velocity_obstacle(chosen, vo, 5.0)
    best = min(
        math.dist(c, v_pref) for c in candidate_velocities(v_pref, 0.22) if not in_velocity_obstacle(c, vo, 5.0)
    )
    assert math.dist(chosen, v_pref) == pytest.approx(best)


def test_select_fully_blocked():
    # two neighbours closing in from both sides leave no safe candidate, not even standing still
    obstacles = [
        VelocityObstacle((0.2, 0.0), 0.16, (-0.3, 0.0)),
        VelocityObstacle((-0.2, 0.0), 0.16, (0.3, 0.0)),
        VelocityObstacle((0.0, 0.2), 0.16, (0.0, -0.3)),
        VelocityObstacle((0.0, -0.2), 0.16, (0.0, 0.3)),
    ]
    assert select_velocity((0.1, 0.0), obstacles, 0.22, 5.0) == ((0.0, 0.0), True)


def test_candidate_grid_shape():
    cands = candidate_velocities((0.1, 0.0), 0.22)
    assert cands[:2] == [(0.1, 0.0), (0.0, 0.0)]
    assert len(cands) == 2 + 36 * 8
    assert max(math.hypot(*c) for c in cands[1:]) == pytest.approx(0.22)


def test_pd_gains():
    PdGains(1, 3)
    with pytest.raises(ValueError):
        PdGains(1, 1)
    with pytest.raises(ValueError):
        PdGains(0, 3)


def test_pd_equilibrium_and_linearity():
    g = PdGains(1.0, 3.0)
    assert np.all(pd_control([1, 2, 0.5], [0, 0, 0], [1, 2, 0.5], g) == 0)
    a = pd_control([1, 0], [0.5, 0], [0, 0], g)
    b = pd_control([2, 0], [1.0, 0], [0, 0], g)
    np.testing.assert_allclose(b, 2 * a)
    np.testing.assert_allclose(a, [-1 - 1.5, 0])


def test_consensus_examples():
    two = CommGraph(2, frozenset({(0, 1)}))
    assert consensus_step([0.0, 1.0], two, 0.5) == [0.5, 0.5]
    assert consensus_step([1.0, 7.0], CommGraph(2, frozenset()), 0.5) == [1.0, 7.0]
    path = CommGraph(3, frozenset({(0, 1), (1, 2)}))
    vals = consensus_step([0.0, 3.0, 6.0], path, 0.25)
    assert vals == pytest.approx([0.75, 3.0, 5.25])
    for _ in range(999):
        vals = consensus_step(vals, path, 0.25)
    assert max(abs(v - 3.0) for v in vals) < 1e-6


def test_consensus_warns_on_large_step():
    path = CommGraph(3, frozenset({(0, 1), (1, 2)}))
    with pytest.warns(ConsensusStepWarning):
        consensus_step([0, 1, 2], path, 0.6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        consensus_step([0, 1, 2], path, 0.49)
    with pytest.raises(ValueError):
        consensus_step([0, 1], path, 0.0)


@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_consensus_preserves_mean(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n)
    vals = list(rng.uniform(-1, 1, n))
    mean = sum(vals) / n
    eps = 0.9 / g.max_degree
    for _ in range(20):
        vals = consensus_step(vals, g, eps)
        assert abs(sum(vals) / n - mean) <= 1e-12


def test_consensus_on_spatial_graph():
    g = build_graph([(0, 0), (0.15, 0), (0.3, 0), (0.45, 0)], 0.2)
    vals = [4.0, 0.0, 0.0, 0.0]
    for _ in range(2000):
        vals = consensus_step(vals, g, 0.4)
    assert vals == pytest.approx([1.0] * 4, abs=1e-9)
