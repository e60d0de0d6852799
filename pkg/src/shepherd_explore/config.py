"""Simulation configuration, seed derivation and structured-text loading.

Config files are TOML (``.toml``) or JSON (``.json``) with these tables,
every key optional::

    [scenario]   environment_kind side_length resolution tree_density tree_radius
                 rng_seed robot_count spawn_radius spawn_separation spawn_clearance
    [sensor]     range ray_count range_noise_sigma
    [robot]      max_speed max_accel
    [swarm]      f_res e c_f rho_f L r_s r_f
    [assignment] lambda_m lambda_d exclusive
    [batching]   linkage_distance method
    [shepherd]   p_p L d_t_initial herd_target recommit_distance
    [monitor]    fma_window sma_window adjust_factor trigger
    [planner]    unknown_cost robot_inflation fallback_radius
    [utility]    cost_weight
    [sim]        strategy tick_rate time_cap coverage_target master_seed
                 repeat_count debug_traces

``swarm.L`` and ``shepherd.L`` default to ``sensor.range``. A missing
``scenario.rng_seed`` is derived from ``sim.master_seed``.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .batching import AssignmentParams
from .environment import EnvironmentKind, ScenarioSpec, SensorModel
from .shepherd import ShepherdConfig
from .strategies import (
    STRATEGIES,
    BatchingParams,
    MonitorParams,
    PlannerParams,
    StrategyParams,
    UtilityParams,
)
from .swarm import SwarmParams

try:  # Python >= 3.11
    import tomllib
except ImportError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib


class ConfigError(ValueError):
    """Inconsistent or malformed configuration, reported before tick 0."""


# fixed stream ids keep each RNG independent of how many draws the others make
_STREAMS = {"world": 1, "swarm": 2, "strategy": 3, "sensor": 4}

_KINEMATICS = {
    EnvironmentKind.GRASS_PLANE: (4.0, 2.0),
    EnvironmentKind.FOREST: (1.0, 1.0),
}


def derive_seed(master_seed: int, stream: str) -> int:
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, _STREAMS[stream]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream_rng(master_seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, stream))


@dataclass(frozen=True)
class RobotParams:
    max_speed: float | None = None
    max_accel: float | None = None


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    sensor: SensorModel = field(default_factory=SensorModel)
    robot: RobotParams = field(default_factory=RobotParams)
    params: StrategyParams = field(default_factory=StrategyParams)
    strategy: str = "froshe"
    tick_rate: float = 10.0
    time_cap: float = 3600.0
    coverage_target: float = 0.99
    master_seed: int = 0
    repeat_count: int = 1
    debug_traces: bool = False

    def kinematics(self) -> tuple[float, float]:
        vmax, amax = _KINEMATICS[self.scenario.environment_kind]
        return (self.robot.max_speed or vmax, self.robot.max_accel or amax)

    def resolved(self) -> "SimConfig":
        """Validate and fill derived values (world seed, kinematics)."""
        validate(self)
        scen = self.scenario
        if scen.rng_seed is None:
            scen = replace(scen, rng_seed=derive_seed(self.master_seed, "world"))
        vmax, amax = self.kinematics()
        return replace(self, scenario=scen, robot=RobotParams(vmax, amax))

    def with_seed(self, master_seed: int) -> "SimConfig":
        return replace(self, master_seed=int(master_seed))

    def to_dict(self) -> dict:
        p = self.params
        return _plain({
            "scenario": dataclasses.asdict(self.scenario),
            "sensor": dataclasses.asdict(self.sensor),
            "robot": dataclasses.asdict(self.robot),
            "swarm": dataclasses.asdict(p.swarm),
            "assignment": dataclasses.asdict(p.assignment),
            "batching": dataclasses.asdict(p.batching),
            "shepherd": dataclasses.asdict(p.shepherd),
            "monitor": dataclasses.asdict(p.monitor),
            "planner": dataclasses.asdict(p.planner),
            "utility": dataclasses.asdict(p.utility),
            "sim": {
                "strategy": self.strategy,
                "tick_rate": self.tick_rate,
                "time_cap": self.time_cap,
                "coverage_target": self.coverage_target,
                "master_seed": self.master_seed,
                "repeat_count": self.repeat_count,
                "debug_traces": self.debug_traces,
            },
        })


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _build(cls, table: dict | None, section: str, **extra):
    table = dict(table or {})
    names = {f.name for f in fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    for k, v in extra.items():
        table.setdefault(k, v)
    try:
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


_SECTIONS = {"scenario", "sensor", "robot", "swarm", "assignment", "batching", "shepherd",
             "monitor", "planner", "utility", "sim"}


def config_from_dict(data: dict) -> SimConfig:
    unknown = set(data) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    scenario = _build(ScenarioSpec, data.get("scenario"), "scenario")
    sensor = _build(SensorModel, data.get("sensor"), "sensor")
    params = StrategyParams(
        swarm=_build(SwarmParams, data.get("swarm"), "swarm", L=sensor.range),
        assignment=_build(AssignmentParams, data.get("assignment"), "assignment"),
        batching=_build(BatchingParams, data.get("batching"), "batching"),
        shepherd=_build(ShepherdConfig, data.get("shepherd"), "shepherd", L=sensor.range),
        monitor=_build(MonitorParams, data.get("monitor"), "monitor"),
        planner=_build(PlannerParams, data.get("planner"), "planner"),
        utility=_build(UtilityParams, data.get("utility"), "utility"),
    )
    sim = dict(data.get("sim") or {})
    cfg = _build(SimConfig, sim, "sim", scenario=scenario, sensor=sensor, params=params,
                 robot=_build(RobotParams, data.get("robot"), "robot"))
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_dict(data)


def _ratio_ok(a: float, b: float) -> bool:
    q = a / b
    return abs(q - round(q)) < 1e-9 and round(q) >= 1


def validate(cfg: SimConfig) -> None:
    if cfg.strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {cfg.strategy!r}; choose from {sorted(STRATEGIES)}")
    if not 0 < cfg.coverage_target <= 1:
        raise ConfigError("coverage_target must lie in (0, 1]")
    if cfg.tick_rate <= 0 or not math.isfinite(cfg.tick_rate):
        raise ConfigError("tick_rate must be positive")
    if cfg.time_cap < 0:
        raise ConfigError("time_cap must be >= 0")
    if cfg.repeat_count < 1:
        raise ConfigError("repeat_count must be >= 1")
    sw = cfg.params.swarm
    if not _ratio_ok(cfg.tick_rate, sw.r_s):
        raise ConfigError("tick_rate must be an integer multiple of swarm.r_s")
    if not _ratio_ok(cfg.tick_rate, sw.r_f):
        raise ConfigError("tick_rate must be an integer multiple of swarm.r_f")
    mon = cfg.params.monitor
    if not 0 < mon.fma_window < mon.sma_window:
        raise ConfigError("monitor windows must satisfy 0 < fma_window < sma_window")
    if cfg.params.batching.method not in ("linkage", "kmeans"):
        raise ConfigError(f"unknown batching method {cfg.params.batching.method!r}")
    if cfg.params.planner.unknown_cost < 1:
        raise ConfigError("planner.unknown_cost must be >= 1")
