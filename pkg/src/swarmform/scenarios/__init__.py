"""Bundled scenarios and the builders that generate them."""

from __future__ import annotations

import math
from importlib import resources

from ..world_model import Pose, ScenarioConfig, TargetShape, load_scenario

CELL = 0.25


def arrowhead_cells(cell: float = CELL) -> list[tuple[float, float]]:
    """36-cell upward chevron: 12 columns, each 3 cells tall, stepping up toward the middle."""
    cells = []
    for col in range(6):
        for k in range(3):
            y = round((col + k) * cell, 6)
            cells.append((round(col * cell, 6), y))
            cells.append((round((11 - col) * cell, 6), y))
    return sorted(cells, key=lambda c: (c[1], c[0]))


def flanking_rectangle(
    cells: list[tuple[float, float]],
    columns_per_side: int = 3,
    col_spacing: float = 0.6,
    row_spacing: float = 0.5,
    clearance: float = 0.75,
) -> list[Pose]:
    """6 x 6 start lattice below the target, split by a central aisle.

    Half the robots stand below-right of the target and half below-left, all
    facing up, so every robot can go straight up and then sideways.
    """
    n = len(cells)
    per_side = n // 2
    rows = math.ceil(per_side / columns_per_side)
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x_right, x_left = max(xs) + clearance, min(xs) - clearance
    top = min(ys) - row_spacing
    poses = []
    for r in range(rows):
        y = top - (rows - 1 - r) * row_spacing
        for m in reversed(range(columns_per_side)):
            poses.append(Pose(x_left - m * col_spacing, y, math.pi / 2))
        for m in range(columns_per_side):
            poses.append(Pose(x_right + m * col_spacing, y, math.pi / 2))
    return poses[:n]


def rectangle_to_arrowhead(**overrides) -> ScenarioConfig:
    cells = arrowhead_cells()
    base = ScenarioConfig(initial_poses=tuple(flanking_rectangle(cells)), shape=TargetShape(tuple(cells)))
    return base.replace(**overrides) if overrides else base


def prepositioned(**overrides) -> ScenarioConfig:
    cells = arrowhead_cells()
    poses = tuple(Pose(x, y, math.pi / 2) for x, y in cells)
    base = ScenarioConfig(initial_poses=poses, shape=TargetShape(tuple(cells)))
    return base.replace(**overrides) if overrides else base


def bundled_names() -> list[str]:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> ScenarioConfig:
    if not name.endswith(".json"):
        name += ".json"
    return load_scenario(resources.files(__name__).joinpath(name).read_text())
