"""Ground-truth worlds, scenario generation and the planar range sensor."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels


class EnvironmentKind(str, Enum):
    GRASS_PLANE = "GrassPlane"
    FOREST = "Forest"


class GenerationError(RuntimeError):
    """Raised when a scenario cannot be realised (e.g. trees crowd the spawn)."""


class SensingError(ValueError):
    """Raised when the sensor pose is outside the world or inside an obstacle."""


@dataclass(frozen=True)
class ScenarioSpec:
    environment_kind: EnvironmentKind = EnvironmentKind.GRASS_PLANE
    side_length: float = 40.0
    resolution: float = 0.5
    tree_density: float = 0.0
    tree_radius: float = 0.3
    rng_seed: int | None = None
    robot_count: int = 1
    spawn_radius: float = 5.0
    spawn_separation: float = 1.5
    spawn_clearance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "environment_kind", EnvironmentKind(self.environment_kind))
        if self.side_length <= 0 or self.resolution <= 0:
            raise ValueError("side_length and resolution must be positive")
        if self.tree_density < 0 or self.tree_radius <= 0:
            raise ValueError("tree_density must be >= 0 and tree_radius > 0")
        if self.robot_count < 1:
            raise ValueError("robot_count must be >= 1")
        if self.spawn_radius < 0:
            raise ValueError("spawn_radius must be >= 0")

    @property
    def interior_cells(self) -> int:
        return int(round(self.side_length / self.resolution))

    @property
    def expected_tree_count(self) -> int:
        if self.environment_kind is not EnvironmentKind.FOREST:
            return 0
        return int(round(self.tree_density * self.side_length**2))


@dataclass(frozen=True)
class SensorModel:
    range: float = 10.0
    ray_count: int = 360
    range_noise_sigma: float = 0.0

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("sensor range must be positive")
        if self.ray_count < 8:
            raise ValueError("ray_count must be >= 8")
        if self.range_noise_sigma < 0:
            raise ValueError("range_noise_sigma must be >= 0")


@dataclass(eq=False)
class WorldGrid:
    """Closed 2D world. ``occupied[r, c]`` is True for obstacle cells.

    The outermost ring of cells is always occupied. World coordinates are
    metres with the origin at the outer corner of cell ``(0, 0)``; ``x``
    runs along columns and ``y`` along rows.
    """

    width_cells: int
    height_cells: int
    resolution: float
    occupied: np.ndarray
    spawns: list[tuple[float, float]] = field(default_factory=list)
    trees: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        if self.width_cells * self.height_cells <= 0 or self.resolution <= 0:
            raise ValueError("world must have positive extent and resolution")
        self.occupied = np.asarray(self.occupied, dtype=bool)
        if self.occupied.shape != (self.height_cells, self.width_cells):
            raise ValueError("occupied array shape does not match dimensions")
        self.occupied.setflags(write=False)
        self._occ_u8 = self.occupied.view(np.uint8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height_cells, self.width_cells

    @property
    def extent(self) -> tuple[float, float]:
        return self.width_cells * self.resolution, self.height_cells * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(math.floor(y / self.resolution)), int(math.floor(x / self.resolution))

    def center_of(self, r: int, c: int) -> tuple[float, float]:
        return (c + 0.5) * self.resolution, (r + 0.5) * self.resolution

    def in_bounds(self, x: float, y: float) -> bool:
        w, h = self.extent
        return 0.0 <= x < w and 0.0 <= y < h

    def interior_occupied_count(self) -> int:
        return int(self.occupied[1:-1, 1:-1].sum())


def _boundary_ring(h: int, w: int) -> np.ndarray:
    occ = np.zeros((h, w), dtype=bool)
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return occ


def _stamp_disc(occ: np.ndarray, cx: float, cy: float, radius: float, res: float) -> None:
    # a cell is blocked when any part of its square lies within the disc
    h, w = occ.shape
    r_lo = max(int(math.floor((cy - radius) / res)), 0)
    r_hi = min(int(math.floor((cy + radius) / res)), h - 1)
    c_lo = max(int(math.floor((cx - radius) / res)), 0)
    c_hi = min(int(math.floor((cx + radius) / res)), w - 1)
    rows = np.arange(r_lo, r_hi + 1)
    cols = np.arange(c_lo, c_hi + 1)
    near_y = np.clip(cy, rows * res, (rows + 1) * res) - cy
    near_x = np.clip(cx, cols * res, (cols + 1) * res) - cx
    hit = near_y[:, None] ** 2 + near_x[None, :] ** 2 <= radius * radius
    occ[r_lo : r_hi + 1, c_lo : c_hi + 1] |= hit


def _sample_spawns(spec: ScenarioSpec, rng: np.random.Generator, start: tuple[float, float],
                   max_tries: int = 2000) -> list[tuple[float, float]]:
    res = spec.resolution
    spawns: list[tuple[float, float]] = []
    # snap to cell centres so every spawn sits cleanly inside one cell
    sc = (math.floor(start[0] / res) + 0.5) * res, (math.floor(start[1] / res) + 0.5) * res
    spawns.append(sc)
    tries = 0
    while len(spawns) < spec.robot_count:
        tries += 1
        if tries > max_tries:
            raise GenerationError("could not place robots inside the spawn radius")
        rad = spec.spawn_radius * math.sqrt(rng.uniform())
        ang = rng.uniform(0.0, 2.0 * math.pi)
        x = sc[0] + rad * math.cos(ang)
        y = sc[1] + rad * math.sin(ang)
        x = (math.floor(x / res) + 0.5) * res
        y = (math.floor(y / res) + 0.5) * res
        if math.hypot(x - sc[0], y - sc[1]) > spec.spawn_radius:
            continue
        if all(math.hypot(x - sx, y - sy) >= spec.spawn_separation for sx, sy in spawns):
            spawns.append((x, y))
    return spawns


def generate_world(spec: ScenarioSpec, max_tree_tries: int = 200) -> WorldGrid:
    """Build the ground-truth grid for ``spec``; deterministic in ``spec.rng_seed``."""
    if spec.rng_seed is None:
        raise ValueError("ScenarioSpec.rng_seed must be set before generating a world")
    n = spec.interior_cells
    h = w = n + 2
    res = spec.resolution
    occ = _boundary_ring(h, w)
    rng = np.random.default_rng(spec.rng_seed)
    start = (w * res / 2.0, h * res / 2.0)
    spawns = _sample_spawns(spec, rng, start)
    for x, y in spawns:
        r, c = int(y // res), int(x // res)
        if not (0 < r < h - 1 and 0 < c < w - 1):
            raise GenerationError("spawn radius reaches outside the world")

    trees: list[tuple[float, float]] = []
    if spec.environment_kind is EnvironmentKind.FOREST:
        lo, hi = res, res + spec.side_length
        keep_out = spec.tree_radius + spec.spawn_clearance
        for _ in range(spec.expected_tree_count):
            for _attempt in range(max_tree_tries):
                tx, ty = rng.uniform(lo, hi, size=2)
                if all(math.hypot(tx - sx, ty - sy) >= keep_out for sx, sy in spawns):
                    break
            else:
                raise GenerationError(
                    f"tree density {spec.tree_density} leaves no room around the spawn area"
                )
            trees.append((float(tx), float(ty)))
            _stamp_disc(occ, float(tx), float(ty), spec.tree_radius, res)
    return WorldGrid(w, h, res, occ, spawns=spawns, trees=trees)


@functools.lru_cache(maxsize=16)
def _ray_directions(ray_count: int) -> np.ndarray:
    ang = np.arange(ray_count, dtype=np.float64) * (2.0 * math.pi / ray_count)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs.setflags(write=False)
    return dirs


@dataclass(frozen=True, eq=False)
class Observation:
    rows: np.ndarray
    cols: np.ndarray
    occupied: np.ndarray

    def __len__(self) -> int:
        return int(self.rows.size)

    def as_set(self) -> set[tuple[tuple[int, int], bool]]:
        return {((int(r), int(c)), bool(o)) for r, c, o in zip(self.rows, self.cols, self.occupied)}

    @classmethod
    def empty(cls) -> "Observation":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), np.zeros(0, dtype=bool))


def sense(world: WorldGrid, pose: tuple[float, float], sensor: SensorModel,
          rng: np.random.Generator | None = None) -> Observation:
    """Cells seen by a 360 degree planar scan from ``pose``.

    Returns traversed free cells plus the first occupied cell of every ray.
    Cells are reported only when their centre lies within the ray's range.
    """
    x, y = float(pose[0]), float(pose[1])
    if not world.in_bounds(x, y):
        raise SensingError(f"pose {pose} is outside the world")
    r0, c0 = world.cell_of(x, y)
    if world.occupied[r0, c0]:
        raise SensingError(f"pose {pose} lies inside an obstacle")
    res = world.resolution
    dirs = _ray_directions(sensor.ray_count)
    lens = np.full(sensor.ray_count, sensor.range / res)
    if sensor.range_noise_sigma > 0 and rng is not None:
        lens = np.maximum(lens + rng.normal(0.0, sensor.range_noise_sigma / res, lens.size), 0.0)
    half = int(math.ceil(lens.max())) + 2
    win = kernels.cast_rays(world._occ_u8, x / res, y / res, dirs, lens, half)
    wr, wc = np.nonzero(win)
    return Observation(
        rows=(wr + (r0 - half)).astype(np.int64),
        cols=(wc + (c0 - half)).astype(np.int64),
        occupied=win[wr, wc] == kernels.SEEN_OCC,
    )


def reachable_mask(world: WorldGrid, seeds: list[tuple[float, float]] | None = None) -> np.ndarray:
    """Free cells reachable from the spawns under the planner's move rules."""
    weight = np.where(world.occupied, 0, 1).astype(np.int64)
    mask = np.zeros(world.shape, dtype=bool)
    for x, y in seeds if seeds is not None else world.spawns:
        r, c = world.cell_of(x, y)
        if mask[r, c] or world.occupied[r, c]:
            continue
        g, _ = kernels.dijkstra(weight, r * world.width_cells + c)
        mask |= (g != kernels.UNREACHED).reshape(world.shape)
    return mask
