"""Lock-step simulation loop, run metrics and multi-seed suites."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, SimConfig, stream_rng
from .environment import generate_world, reachable_mask, sense
from .mapping import OCCUPIED, UNKNOWN, ExplorationMap, detect_frontiers, integrate_observations
from .planner import PathError, RobotState, plan_path, step_motion, traversal_weights
from .strategies import StrategyDecisionInput, make_strategy

log = logging.getLogger(__name__)

__all__ = ["SimConfig", "ConfigError", "RunMetrics", "SuiteResult", "run", "run_suite",
           "aggregate_times", "METRIC_COLUMNS"]

# leading per-tick columns; per-robot x, y, mode triples follow
METRIC_COLUMNS = ("tick", "time", "explored_cells", "explored_fraction")


@dataclass
class RunMetrics:
    config: SimConfig
    rows: list[tuple] = field(default_factory=list)
    completed: bool = False
    completion_time: float | None = None
    termination: str = ""
    distance: list[float] = field(default_factory=list)
    mode_switches: int = 0
    final_fraction: float = 0.0
    reachable_cells: int = 0
    traces: dict[str, list[tuple]] = field(default_factory=dict)

    @property
    def dnf(self) -> bool:
        return not self.completed

    @property
    def n_robots(self) -> int:
        return len(self.distance)

    def columns(self) -> list[str]:
        cols = list(METRIC_COLUMNS)
        for i in range(self.n_robots):
            cols += [f"r{i}_x", f"r{i}_y", f"r{i}_mode"]
        return cols

    def csv_text(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(self.columns())
        wr.writerows(self.rows)
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.csv_text())

    def summary(self) -> dict:
        return {
            "strategy": self.config.strategy,
            "robots": self.n_robots,
            "master_seed": self.config.master_seed,
            "world_seed": self.config.scenario.rng_seed,
            "completed": self.completed,
            "dnf": self.dnf,
            "completion_time": self.completion_time,
            "termination": self.termination,
            "final_fraction": round(self.final_fraction, 9),
            "reachable_cells": self.reachable_cells,
            "distance": [round(d, 6) for d in self.distance],
            "mode_switches": self.mode_switches,
            "ticks": len(self.rows),
        }

    def time_or_cap(self) -> float:
        return self.completion_time if self.completed else float(self.config.time_cap)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


class _Leg:
    """Remaining waypoints a robot still has to visit after its current path."""

    __slots__ = ("waypoints", "mode")

    def __init__(self, waypoints=(), mode=None):
        self.waypoints = list(waypoints)
        self.mode = mode


def run(config: SimConfig) -> RunMetrics:
    """Simulate one exploration run. Identical configs give identical metrics."""
    cfg = config.resolved()
    p = cfg.params
    world = generate_world(cfg.scenario)
    reach = reachable_mask(world)
    n_reach = int(reach.sum())
    emap = ExplorationMap.like(world)
    vmax, amax = cfg.robot.max_speed, cfg.robot.max_accel
    robots = [RobotState(pose=s, max_speed=vmax, max_accel=amax) for s in world.spawns]
    legs = [_Leg() for _ in robots]
    n = len(robots)
    res = world.resolution

    strategy = make_strategy(cfg.strategy, p, n, world.extent, stream_rng(cfg.master_seed, "swarm"),
                             res)
    strategy.debug = cfg.debug_traces
    sensor_rng = stream_rng(cfg.master_seed, "sensor")

    dt = 1.0 / cfg.tick_rate
    f_every = int(round(cfg.tick_rate / p.swarm.r_f))
    s_every = int(round(cfg.tick_rate / p.swarm.r_s))
    metrics = RunMetrics(config=cfg, reachable_cells=n_reach)
    frontiers = None
    snapshot = None
    robot_modes = [""] * n

    def plan_leg(i: int) -> bool:
        # plan toward the next waypoint that yields a non-trivial path
        robot = robots[i]
        leg = legs[i]
        while leg.waypoints:
            goal = leg.waypoints[0]
            others = [r.pose for j, r in enumerate(robots) if j != i]
            start = emap.cell_of(*robot.pose)
            w = traversal_weights(emap, p.planner.unknown_cost, others, p.planner.robot_inflation,
                                  keep_free=[start])
            try:
                path = plan_path(emap, robot.pose, goal, weight=w,
                                 fallback_radius=p.fallback_radius)
            except PathError:
                leg.waypoints.pop(0)
                continue
            if len(path) > 1:
                robot.set_path(path, res)
                return True
            leg.waypoints.pop(0)
        robot.clear_path()
        return False

    k = 0
    while True:
        t = k / cfg.tick_rate
        # 1. sense and integrate
        for robot in robots:
            integrate_observations(emap, sense(world, robot.pose, cfg.sensor, sensor_rng))
        known = emap.cells != UNKNOWN
        frac = float(np.count_nonzero(known & reach)) / n_reach if n_reach else 1.0
        metrics.final_fraction = frac
        row = [k, _fmt(t), emap.explored_cell_count, _fmt(frac)]
        for robot, mode in zip(robots, robot_modes):
            row += [_fmt(robot.pose[0]), _fmt(robot.pose[1]), mode]
        metrics.rows.append(tuple(row))

        # termination: coverage first, then the time cap
        if frac >= cfg.coverage_target:
            metrics.completed, metrics.completion_time, metrics.termination = True, t, "coverage"
            break
        if t >= cfg.time_cap:
            metrics.termination = "time_cap"
            break

        # paths crossing newly discovered obstacles are re-planned
        for i, robot in enumerate(robots):
            if robot.current_path:
                cells = np.asarray(robot.current_path)
                if np.any(emap.cells[cells[:, 0], cells[:, 1]] == OCCUPIED):
                    plan_leg(i)

        # 2. frontier snapshot at r_f
        if k % f_every == 0:
            frontiers = detect_frontiers(emap)
            snapshot = emap.copy()
            if len(frontiers) == 0:
                metrics.completed, metrics.completion_time = True, t
                metrics.termination = "frontiers_exhausted"
                break

        # 3. strategy update at r_s
        if k % s_every == 0:
            inp = StrategyDecisionInput(
                emap=emap, snapshot=snapshot, frontiers=frontiers,
                robot_poses=tuple(r.pose for r in robots),
                robot_idle=tuple(r.done and not legs[i].waypoints for i, r in enumerate(robots)),
                tick=k, time=t,
            )
            out = strategy.update(inp)
            if out.complete:
                metrics.completed, metrics.completion_time = True, t
                metrics.termination = "frontiers_exhausted"
                break
            for i, d in enumerate(out.directives):
                if d is None:
                    continue
                legs[i] = _Leg(d.waypoints, d.mode)
                robots[i].set_path(d.path, res)
                robot_modes[i] = d.mode.value if d.mode is not None else "frontier"

        # 4. motion
        for i, robot in enumerate(robots):
            step_motion(robot, dt, res)
            if robot.done and legs[i].waypoints:
                legs[i].waypoints.pop(0)
                if legs[i].waypoints:
                    plan_leg(i)
        k += 1

    metrics.distance = [r.odometer for r in robots]
    metrics.mode_switches = getattr(strategy, "mode_switches", 0)
    if cfg.debug_traces:
        metrics.traces = {
            "decisions": strategy.trace_rows,
            "swarm": getattr(strategy, "swarm_rows", []),
            "monitor": getattr(strategy, "monitor_rows", []),
        }
    return metrics


TRACE_HEADERS = {
    "decisions": ["tick", "robot_id", "mode", "waypoint_coords"],
    "swarm": ["tick", "sheep_id", "x", "y", "weight"],
    "monitor": ["tick", "robot_id", "explored_pct", "delta_e", "fma", "sma", "d_t", "event_flag"],
}


def write_traces(metrics: RunMetrics, out_dir: Path, stem: str) -> list[Path]:
    paths = []
    for name, rows in metrics.traces.items():
        path = out_dir / f"{stem}_{name}.csv"
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(TRACE_HEADERS[name])
            for row in rows:
                if name == "decisions":
                    row = [*row[:3], " ".join(_fmt(v) for v in row[3:])]
                wr.writerow(row)
        paths.append(path)
    return paths


def aggregate_times(times) -> dict:
    """Median, mean and interquartile statistics of completion times."""
    a = np.asarray(list(times), dtype=np.float64)
    q1, med, q3 = np.percentile(a, [25, 50, 75])
    return {
        "n": int(a.size),
        "median": float(med),
        "mean": float(a.mean()),
        "q1": float(q1),
        "q3": float(q3),
        "iqr": float(q3 - q1),
        "min": float(a.min()),
        "max": float(a.max()),
        "std": float(a.std()),
    }


@dataclass
class SuiteResult:
    runs: list[RunMetrics]
    aggregate: dict

    @property
    def times(self) -> list[float]:
        return [r.time_or_cap() for r in self.runs]


def _run_indexed(args):
    idx, cfg = args
    try:
        return run(cfg)
    except Exception as exc:  # re-raised in the parent with the run index attached
        raise RuntimeError(f"run {idx} (master_seed={cfg.master_seed}) failed: {exc}") from exc


def suite_configs(config: SimConfig) -> list[SimConfig]:
    return [config.with_seed(config.master_seed + k) for k in range(config.repeat_count)]


def run_suite(config: SimConfig, workers: int = 1) -> SuiteResult:
    """``repeat_count`` runs with master seeds ``master_seed + k``.

    DNF runs enter the statistics at ``time_cap`` and are counted in
    ``aggregate["dnf"]``.
    """
    cfgs = suite_configs(config)
    started = time.perf_counter()
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_indexed, enumerate(cfgs)))
    else:
        runs = [_run_indexed(a) for a in enumerate(cfgs)]
    agg = aggregate_times(r.time_or_cap() for r in runs)
    agg["dnf"] = sum(r.dnf for r in runs)
    log.info("suite of %d runs finished in %.1fs", len(runs), time.perf_counter() - started)
    return SuiteResult(runs, agg)


def summary_json(metrics: RunMetrics) -> str:
    return json.dumps(metrics.summary(), indent=2, sort_keys=True) + "\n"


def coverage_is_monotone(metrics: RunMetrics) -> bool:
    fr = [float(r[3]) for r in metrics.rows]
    return all(b >= a for a, b in zip(fr, fr[1:])) and not any(math.isnan(f) for f in fr)
