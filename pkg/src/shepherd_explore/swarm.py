"""Virtual sheep: frontier downsampling and the between-update swarm estimator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mapping import UNKNOWN, ExplorationMap, FrontierSet

# predator singularity guard (metres)
PREDATOR_EPS = 0.1


@dataclass(frozen=True)
class SwarmParams:
    f_res: float = 2.5
    e: float = 0.05
    c_f: float = 0.2
    rho_f: float = 1.0
    L: float = 10.0
    r_s: float = 10.0
    r_f: float = 1.0

    def __post_init__(self):
        if self.f_res <= 0:
            raise ValueError("f_res must be positive")
        if self.e < 0 or self.c_f < 0 or self.rho_f < 0:
            raise ValueError("force gains must be non-negative")
        if self.L <= 0:
            raise ValueError("detection range L must be positive")
        if self.r_f <= 0 or self.r_s <= self.r_f:
            raise ValueError("swarm rate r_s must exceed frontier rate r_f")


@dataclass(frozen=True)
class VirtualSheep:
    position: tuple[float, float]
    weight: int


@dataclass(frozen=True, eq=False)
class SwarmState:
    positions: np.ndarray  # (n, 2) metres
    weights: np.ndarray  # (n,) int64
    source_map_version: int
    params: SwarmParams = field(default_factory=SwarmParams)
    bounds: tuple[float, float] = (math.inf, math.inf)

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def sheep(self) -> list[VirtualSheep]:
        return [VirtualSheep((float(x), float(y)), int(w))
                for (x, y), w in zip(self.positions, self.weights)]

    def with_positions(self, positions: np.ndarray) -> "SwarmState":
        return SwarmState(positions, self.weights, self.source_map_version, self.params, self.bounds)


def square_half_width(f_res: float, resolution: float) -> int:
    """Cell offset k such that the weight square spans ``2k+1`` cells."""
    return int(math.floor(f_res / (2.0 * resolution) + 1e-9))


def unknown_counts(cells: np.ndarray, rows: np.ndarray, cols: np.ndarray, k: int) -> np.ndarray:
    """Unknown cells in the clipped ``(2k+1)``-square around each ``(row, col)``."""
    unk = (cells == UNKNOWN).astype(np.int64)
    integ = np.zeros((unk.shape[0] + 1, unk.shape[1] + 1), dtype=np.int64)
    integ[1:, 1:] = unk.cumsum(0).cumsum(1)
    h, w = unk.shape
    r0 = np.clip(rows - k, 0, h)
    r1 = np.clip(rows + k + 1, 0, h)
    c0 = np.clip(cols - k, 0, w)
    c1 = np.clip(cols + k + 1, 0, w)
    return integ[r1, c1] - integ[r0, c1] - integ[r1, c0] + integ[r0, c0]


def allocate_virtual_sheep(frontiers: FrontierSet, emap: ExplorationMap,
                           params: SwarmParams) -> SwarmState:
    """Thin frontier cells to spacing ``f_res`` and weight them by nearby unknown area.

    Frontier cells are visited in row-major order; a cell becomes a sheep
    iff it is at least ``f_res`` from every sheep accepted so far.
    """
    bounds = (emap.width * emap.resolution, emap.height * emap.resolution)
    if len(frontiers) == 0:
        return SwarmState(np.zeros((0, 2)), np.zeros(0, dtype=np.int64),
                          frontiers.map_version, params, bounds)
    rows = frontiers.cells[:, 0]
    cols = frontiers.cells[:, 1]
    res = emap.resolution
    pts = np.stack([(cols + 0.5) * res, (rows + 0.5) * res], axis=1)
    keep = kernels.thin_points(pts, params.f_res)
    k = square_half_width(params.f_res, res)
    weights = unknown_counts(emap.cells, rows[keep], cols[keep], k)
    return SwarmState(pts[keep].copy(), weights.astype(np.int64), frontiers.map_version,
                      params, bounds)


def swarm_velocities(positions: np.ndarray, robot_poses: np.ndarray, params: SwarmParams,
                     err_angles: np.ndarray | None) -> np.ndarray:
    """Sum of erroneous, dispersal and predator terms for every sheep (m/s)."""
    n = positions.shape[0]
    vel = np.zeros((n, 2))
    if n == 0:
        return vel
    if err_angles is not None and params.e > 0:
        vel[:, 0] += params.e * np.cos(err_angles)
        vel[:, 1] += params.e * np.sin(err_angles)
    robots = np.asarray(robot_poses, dtype=np.float64).reshape(-1, 2)
    if robots.shape[0] == 0:
        return vel

    diff = positions[:, None, :] - robots[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    in_range = dist <= params.L
    near = in_range.any(axis=1)

    if params.rho_f > 0:
        safe = np.where(dist > 0, dist, 1.0)
        unit = diff / safe[..., None]
        unit[dist == 0] = (1.0, 0.0)
        mag = np.where(in_range, params.rho_f / np.maximum(dist, PREDATOR_EPS), 0.0)
        vel += (mag[..., None] * unit).sum(axis=1)

    if params.c_f > 0 and n > 1 and near.any():
        others = (positions.sum(axis=0)[None, :] - positions) / (n - 1)
        away = positions - others
        norm = np.hypot(away[:, 0], away[:, 1])
        ok = near & (norm > 0)
        vel[ok] += params.c_f * away[ok] / norm[ok, None]
    return vel


def estimate_step(state: SwarmState, robot_poses, dt: float,
                  rng: np.random.Generator | None = None) -> SwarmState:
    """Advance every sheep by one explicit Euler step of length ``dt``."""
    n = len(state)
    if n == 0:
        return state
    angles = None
    if state.params.e > 0:
        if rng is None:
            raise ValueError("an rng is required when the erroneous force is enabled")
        angles = rng.uniform(0.0, 2.0 * math.pi, size=n)
    vel = swarm_velocities(state.positions, np.asarray(robot_poses, dtype=np.float64),
                           state.params, angles)
    pos = state.positions + dt * vel
    xmax, ymax = state.bounds
    pos[:, 0] = np.clip(pos[:, 0], 0.0, np.nextafter(xmax, 0.0))
    pos[:, 1] = np.clip(pos[:, 1], 0.0, np.nextafter(ymax, 0.0))
    return state.with_positions(pos)
