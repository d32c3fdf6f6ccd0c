"""Independent reference computations used by the tests."""

import math

import numpy as np

from swarmform.network import CommGraph


def euler_pose(pose, segments, total_substeps=1_000_000):
    """Forward-Euler unicycle over ``segments`` of (v, omega, dt).

    The substeps are split across segments in proportion to duration. Within
    a segment the heading sequence is known in closed form, so the Euler sums
    are evaluated as arrays instead of a Python loop.
    """
    x, y, theta = pose
    total_t = sum(dt for _, _, dt in segments)
    for v, w, dt in segments:
        n = max(1, int(round(total_substeps * dt / total_t)))
        h = dt / n
        headings = theta + w * h * np.arange(n)
        x += float(np.sum(v * h * np.cos(headings)))
        y += float(np.sum(v * h * np.sin(headings)))
        theta += w * dt
    return x, y, theta


def sampled_min_distance(apex, obstacle_velocity, v, tau, samples=10_000):
    """Minimum separation over an evenly sampled grid of t in (0, tau]."""
    t = np.linspace(tau / samples, tau, samples)
    wx = obstacle_velocity[0] - v[0]
    wy = obstacle_velocity[1] - v[1]
    return float(np.min(np.hypot(apex[0] + t * wx, apex[1] + t * wy)))


def random_connected_graph(rng, n, extra_edge_prob=0.3):
    """Random spanning tree plus independent extra edges."""
    order = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        a, b = int(order[k]), int(order[rng.integers(0, k)])
        edges.add((min(a, b), max(a, b)))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < extra_edge_prob:
                edges.add((i, j))
    return CommGraph(n, frozenset(edges))


def is_connected(graph):
    if graph.n == 0:
        return True
    seen, stack = {0}, [0]
    while stack:
        i = stack.pop()
        for j in graph.neighbors(i):
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == graph.n


def angle_diff(a, b):
    return abs(math.remainder(a - b, 2 * math.pi))
