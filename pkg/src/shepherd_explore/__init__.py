"""Deterministic multi-robot frontier exploration on 2D occupancy grids.

Robots explore a closed grid world with a planar range sensor. Three
coordination strategies are available: shepherding of virtual sheep placed
on frontiers (``froshe``), nearest frontier (``greedy``) and coordinated
utility assignment (``utility``).

Set ``SHEPHERD_EXPLORE_NUMBA=0`` before import to run the pure-numpy
kernels instead of the compiled ones.
"""
from ._accel import HAS_NUMBA, USE_NUMBA, backend_name
from .config import ConfigError, SimConfig, config_from_dict, load_config
from .engine import RunMetrics, SuiteResult, aggregate_times, run, run_suite
from .environment import (
    EnvironmentKind,
    GenerationError,
    ScenarioSpec,
    SensingError,
    SensorModel,
    WorldGrid,
    generate_world,
    sense,
)
from .mapping import ExplorationMap, FrontierSet, detect_frontiers, integrate_observations

__version__ = "0.1.0"

__all__ = [
    "HAS_NUMBA", "USE_NUMBA", "backend_name",
    "ConfigError", "SimConfig", "config_from_dict", "load_config",
    "RunMetrics", "SuiteResult", "aggregate_times", "run", "run_suite",
    "EnvironmentKind", "GenerationError", "ScenarioSpec", "SensingError", "SensorModel",
    "WorldGrid", "generate_world", "sense",
    "ExplorationMap", "FrontierSet", "detect_frontiers", "integrate_observations",
    "__version__",
]
