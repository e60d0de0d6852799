"""Predator processor: collecting and herding goal poses for one robot."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .batching import SwarmBatch

log = logging.getLogger(__name__)


class Mode(str, Enum):
    COLLECTING = "Collecting"
    HERDING = "Herding"


class ShepherdError(ValueError):
    """Degenerate geometry: the direction needed for a goal pose is undefined."""


@dataclass(frozen=True)
class ShepherdConfig:
    p_p: float = 0.3
    L: float = 10.0
    d_t_initial: float = 10.0
    herd_target: str = "heaviest"  # or "nearest_weighted"
    recommit_distance: float = 0.0  # goal shift up to this keeps the current legs

    def __post_init__(self):
        if not 0 < self.p_p <= 1:
            raise ValueError("p_p must lie in (0, 1]")
        if self.recommit_distance < 0:
            raise ValueError("recommit_distance must be >= 0")
        if self.d_t_initial <= 0 or self.L <= 0:
            raise ValueError("d_t_initial and L must be positive")
        if self.herd_target not in ("heaviest", "nearest_weighted"):
            raise ValueError(f"unknown herd_target {self.herd_target!r}")


@dataclass(frozen=True)
class ShepherdDecision:
    mode: Mode
    waypoint_sequence: tuple[tuple[float, float], ...]
    context: dict = field(default_factory=dict, compare=False)


def _clamp(p, bounds) -> tuple[tuple[float, float], bool]:
    if bounds is None:
        return (float(p[0]), float(p[1])), False
    xmax, ymax = bounds
    x = min(max(float(p[0]), 0.0), math.nextafter(xmax, 0.0))
    y = min(max(float(p[1]), 0.0), math.nextafter(ymax, 0.0))
    return (x, y), (x, y) != (float(p[0]), float(p[1]))


def _member_positions(batch: SwarmBatch, positions: np.ndarray) -> np.ndarray:
    return np.asarray(positions, dtype=np.float64)[list(batch.member_indices)]


def is_compact(batch: SwarmBatch, positions: np.ndarray, d_t: float) -> bool:
    """True iff every member lies within ``d_t`` of the batch centroid."""
    if not batch.member_indices:
        raise ValueError("empty batch")
    pts = _member_positions(batch, positions)
    cm = np.asarray(batch.centroid)
    return bool(np.hypot(*(pts - cm).T).max() <= d_t)


def collecting_pose(v_f, c_m, p_p: float, L: float) -> np.ndarray:
    v_f = np.asarray(v_f, dtype=np.float64)
    delta = np.asarray(c_m, dtype=np.float64) - v_f
    norm = math.hypot(delta[0], delta[1])
    if norm == 0:
        raise ShepherdError("farthest sheep coincides with the centre of mass")
    return v_f + p_p * L * delta / norm


def driving_pose(c_m, c_h, p_p: float, L: float) -> np.ndarray:
    c_m = np.asarray(c_m, dtype=np.float64)
    delta = c_m - np.asarray(c_h, dtype=np.float64)
    norm = math.hypot(delta[0], delta[1])
    if norm == 0:
        raise ShepherdError("herding target coincides with the centre of mass")
    return c_m - p_p * L * delta / norm


def collecting_decision(batch: SwarmBatch, positions: np.ndarray, robot_pose,
                        cfg: ShepherdConfig, bounds=None) -> ShepherdDecision:
    """Reposition beside the outermost sheep, then drive it to the centre of mass."""
    pts = _member_positions(batch, positions)
    c_m = np.asarray(batch.centroid, dtype=np.float64)
    far = int(np.argmax(np.hypot(*(pts - c_m).T)))
    v_f = pts[far]
    p_c = collecting_pose(v_f, c_m, cfg.p_p, cfg.L)
    wp1, clamped1 = _clamp(p_c, bounds)
    wp2, clamped2 = _clamp(c_m, bounds)
    if clamped1 or clamped2:
        log.debug("collecting waypoint clamped to world bounds")
    return ShepherdDecision(
        Mode.COLLECTING, (wp1, wp2),
        {"v_f": (float(v_f[0]), float(v_f[1])), "C_m": wp2, "C_h": None,
         "clamped": clamped1 or clamped2},
    )


def herd_target(own: int, batches: list[SwarmBatch], cfg: ShepherdConfig) -> int | None:
    """Index of the batch to herd toward, or None if ``own`` is the only one."""
    others = [i for i in range(len(batches)) if i != own]
    if not others:
        return None
    if cfg.herd_target == "heaviest":
        # batches are already ordered heaviest-first with deterministic ties
        return max(others, key=lambda i: (batches[i].total_weight, -i))
    c_m = np.asarray(batches[own].centroid)

    def score(i):
        d = float(np.hypot(*(np.asarray(batches[i].centroid) - c_m)))
        return (batches[i].total_weight / (1.0 + d), -i)

    return max(others, key=score)


def herding_decision(own: int, batches: list[SwarmBatch], positions: np.ndarray, robot_pose,
                     cfg: ShepherdConfig, bounds=None) -> ShepherdDecision:
    """Drive pose on the line from the own batch toward the chosen herding target."""
    c_m = np.asarray(batches[own].centroid, dtype=np.float64)
    tgt = herd_target(own, batches, cfg)
    if tgt is not None:
        c_h = np.asarray(batches[tgt].centroid, dtype=np.float64)
    else:
        # lone batch: push it outward, away from the robot
        c_h = 2.0 * c_m - np.asarray(robot_pose, dtype=np.float64)
    try:
        p_d = driving_pose(c_m, c_h, cfg.p_p, cfg.L)
    except ShepherdError:
        try:
            return collecting_decision(batches[own], positions, robot_pose, cfg, bounds)
        except ShepherdError:
            wp, _ = _clamp(c_m, bounds)
            return ShepherdDecision(Mode.COLLECTING, (wp,),
                                    {"v_f": None, "C_m": wp, "C_h": None, "clamped": False})
    wp1, clamped1 = _clamp(p_d, bounds)
    wp2, clamped2 = _clamp(c_h, bounds)
    if clamped1 or clamped2:
        log.debug("herding waypoint clamped to world bounds")
    return ShepherdDecision(
        Mode.HERDING, (wp1, wp2),
        {"v_f": None, "C_m": (float(c_m[0]), float(c_m[1])), "C_h": wp2,
         "clamped": clamped1 or clamped2, "fallback": tgt is None},
    )


def decide(own: int, batches: list[SwarmBatch], positions: np.ndarray, robot_pose, d_t: float,
           cfg: ShepherdConfig, bounds=None) -> ShepherdDecision:
    if is_compact(batches[own], positions, d_t):
        return herding_decision(own, batches, positions, robot_pose, cfg, bounds)
    return collecting_decision(batches[own], positions, robot_pose, cfg, bounds)
