"""Shared exploration map and frontier extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import Observation

UNKNOWN = 0
FREE = 1
OCCUPIED = 2

_DUMP_CHARS = {UNKNOWN: "?", FREE: ".", OCCUPIED: "#"}
_DUMP_CODES = {v: k for k, v in _DUMP_CHARS.items()}


class ExplorationMap:
    """Occupancy map shared by every robot (cells are UNKNOWN/FREE/OCCUPIED)."""

    def __init__(self, width: int, height: int, resolution: float, cells: np.ndarray | None = None,
                 version: int = 0):
        self.width = int(width)
        self.height = int(height)
        self.resolution = float(resolution)
        if cells is None:
            cells = np.zeros((self.height, self.width), dtype=np.uint8)
        self.cells = np.array(cells, dtype=np.uint8)
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells shape does not match dimensions")
        self.version = int(version)
        self.explored_cell_count = int(np.count_nonzero(self.cells))

    @classmethod
    def like(cls, world) -> "ExplorationMap":
        return cls(world.width_cells, world.height_cells, world.resolution)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def copy(self) -> "ExplorationMap":
        return ExplorationMap(self.width, self.height, self.resolution, self.cells.copy(), self.version)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return int(np.floor(y / self.resolution)), int(np.floor(x / self.resolution))

    def center_of(self, r, c):
        return (np.asarray(c) + 0.5) * self.resolution, (np.asarray(r) + 0.5) * self.resolution

    def __eq__(self, other):
        if not isinstance(other, ExplorationMap):
            return NotImplemented
        return (self.shape == other.shape and self.resolution == other.resolution
                and self.version == other.version and np.array_equal(self.cells, other.cells))

    def dumps(self) -> str:
        lut = np.array([ord(_DUMP_CHARS[k]) for k in (UNKNOWN, FREE, OCCUPIED)], dtype=np.uint8)
        rows = lut[self.cells]
        body = "\n".join(row.tobytes().decode("ascii") for row in rows)
        header = (f"# width={self.width} height={self.height} "
                  f"resolution={self.resolution!r} version={self.version}")
        return header + "\n" + body + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExplorationMap":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ValueError("map dump must start with a '#' header line")
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        width, height = int(meta["width"]), int(meta["height"])
        rows = lines[1 : 1 + height]
        if len(rows) != height or any(len(r) != width for r in rows):
            raise ValueError("map dump body does not match header dimensions")
        cells = np.array([[_DUMP_CODES[ch] for ch in row] for row in rows], dtype=np.uint8)
        return cls(width, height, float(meta["resolution"]), cells, int(meta["version"]))


def integrate_observations(emap: ExplorationMap, obs: Observation) -> ExplorationMap:
    """Write newly seen cells into ``emap`` (in place) and bump its version.

    Known cells are left untouched; with ground-truth sensing an observation
    never contradicts them.
    """
    if len(obs):
        r, c = obs.rows, obs.cols
        unknown = emap.cells[r, c] == UNKNOWN
        if unknown.any():
            vals = np.where(obs.occupied[unknown], OCCUPIED, FREE).astype(np.uint8)
            emap.cells[r[unknown], c[unknown]] = vals
            # duplicates in obs are possible only for identical (cell, state) pairs
            emap.explored_cell_count = int(np.count_nonzero(emap.cells))
    emap.version += 1
    return emap


@dataclass(frozen=True, eq=False)
class FrontierSet:
    cells: np.ndarray  # (n, 2) int64 rows of (row, col), row-major order
    map_version: int

    def __len__(self) -> int:
        return int(self.cells.shape[0])

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(r), int(c)) for r, c in self.cells}

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        if len(self):
            m[self.cells[:, 0], self.cells[:, 1]] = True
        return m


def unknown_neighbour_mask(cells: np.ndarray) -> np.ndarray:
    """True where at least one of the 8 neighbours is UNKNOWN."""
    unk = np.pad(cells == UNKNOWN, 1, constant_values=False)
    h, w = cells.shape
    hit = np.zeros((h, w), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr or dc:
                hit |= unk[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]
    return hit


def detect_frontiers(emap: ExplorationMap) -> FrontierSet:
    """Free cells with an unknown 8-neighbour, in row-major order."""
    front = (emap.cells == FREE) & unknown_neighbour_mask(emap.cells)
    rr, cc = np.nonzero(front)
    cells = np.stack([rr, cc], axis=1).astype(np.int64) if rr.size else np.zeros((0, 2), np.int64)
    cells.setflags(write=False)
    return FrontierSet(cells, emap.version)
