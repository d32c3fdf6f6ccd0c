"""Deterministic multi-robot simulator with a row-based shape formation protocol."""

from .sim_engine import RunReport, Simulation, run, run_to_string
from .world_model import Pose, ScenarioConfig, ScenarioError, TargetShape, dump_scenario, load_scenario

__all__ = [
    "Pose",
    "RunReport",
    "ScenarioConfig",
    "ScenarioError",
    "Simulation",
    "TargetShape",
    "dump_scenario",
    "load_scenario",
    "run",
    "run_to_string",
]
__version__ = "0.1.0"
