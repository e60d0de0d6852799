"""Grid path planning and trapezoidal-profile waypoint following."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .mapping import FREE, OCCUPIED, UNKNOWN, ExplorationMap

# integer weight of a free cell; unknown cells scale this by unknown_cost
BASE_WEIGHT = 100


class PathError(RuntimeError):
    """No traversable cell near the requested goal is reachable."""


def traversal_weights(emap: ExplorationMap, unknown_cost: float = 1.0, avoid=(),
                      inflation: float = 1.0, keep_free=()) -> np.ndarray:
    """Per-cell integer step weights (0 = blocked) for the search kernels."""
    if unknown_cost < 1.0:
        raise ValueError("unknown_cost below 1 would break the octile heuristic")
    lut = np.zeros(3, dtype=np.int64)
    lut[FREE] = BASE_WEIGHT
    lut[UNKNOWN] = int(round(BASE_WEIGHT * unknown_cost))
    lut[OCCUPIED] = 0
    weight = lut[emap.cells]
    res = emap.resolution
    starts = [((c + 0.5) * res, (r + 0.5) * res) for r, c in keep_free]
    for ax, ay in avoid:
        # a robot already inside another's disc must still be able to leave it
        if any((sx - ax) ** 2 + (sy - ay) ** 2 <= inflation * inflation for sx, sy in starts):
            continue
        r_lo = max(int(math.floor((ay - inflation) / res)), 0)
        r_hi = min(int(math.floor((ay + inflation) / res)), emap.height - 1)
        c_lo = max(int(math.floor((ax - inflation) / res)), 0)
        c_hi = min(int(math.floor((ax + inflation) / res)), emap.width - 1)
        if r_lo > r_hi or c_lo > c_hi:
            continue
        rows = (np.arange(r_lo, r_hi + 1) + 0.5) * res - ay
        cols = (np.arange(c_lo, c_hi + 1) + 0.5) * res - ax
        near = rows[:, None] ** 2 + cols[None, :] ** 2 <= inflation * inflation
        weight[r_lo : r_hi + 1, c_lo : c_hi + 1][near] = 0
    for r, c in keep_free:
        if emap.cells[r, c] != OCCUPIED:
            weight[r, c] = lut[emap.cells[r, c]]
    return weight


def path_cost(weight: np.ndarray, path: list[tuple[int, int]]) -> int:
    total = 0
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        unit = kernels.DIAGONAL if (r0 != r1 and c0 != c1) else kernels.STRAIGHT
        total += unit * int(weight[r1, c1])
    return total


def _unflatten(idx: list[int], width: int) -> list[tuple[int, int]]:
    return [divmod(i, width) for i in idx]


def nearest_reachable(g: np.ndarray, shape, resolution: float, goal, radius: float) -> int | None:
    """Reachable cell closest to ``goal`` within ``radius`` (ties: cost, then index)."""
    h, w = shape
    gx, gy = goal
    r_lo = max(int(math.floor((gy - radius) / resolution)), 0)
    r_hi = min(int(math.floor((gy + radius) / resolution)), h - 1)
    c_lo = max(int(math.floor((gx - radius) / resolution)), 0)
    c_hi = min(int(math.floor((gx + radius) / resolution)), w - 1)
    if r_lo > r_hi or c_lo > c_hi:
        return None
    rr, cc = np.meshgrid(np.arange(r_lo, r_hi + 1), np.arange(c_lo, c_hi + 1), indexing="ij")
    rr = rr.ravel()
    cc = cc.ravel()
    flat = rr * w + cc
    cost = g[flat]
    dist2 = ((cc + 0.5) * resolution - gx) ** 2 + ((rr + 0.5) * resolution - gy) ** 2
    ok = (cost != kernels.UNREACHED) & (dist2 <= radius * radius)
    if not ok.any():
        return None
    order = np.lexsort((flat[ok], cost[ok], dist2[ok]))
    return int(flat[ok][order[0]])


def plan_path(emap: ExplorationMap, start, goal, *, unknown_cost: float = 1.0, avoid=(),
              inflation: float = 1.0, fallback_radius: float = 5.0,
              weight: np.ndarray | None = None) -> list[tuple[int, int]]:
    """Shortest 8-connected cell path from ``start`` to ``goal`` (world metres).

    Occupied cells are impassable, unknown cells are traversable. When the
    goal cell is blocked or unreachable, the path ends at the reachable cell
    nearest the goal within ``fallback_radius``; failing that, PathError.
    """
    h, w = emap.shape
    sr, sc = emap.cell_of(*start)
    if not (0 <= sr < h and 0 <= sc < w) or emap.cells[sr, sc] == OCCUPIED:
        raise PathError(f"start {start} is not on a traversable cell")
    if weight is None:
        weight = traversal_weights(emap, unknown_cost, avoid, inflation, keep_free=[(sr, sc)])
    s_idx = sr * w + sc
    gx = min(max(float(goal[0]), 0.0), math.nextafter(w * emap.resolution, 0.0))
    gy = min(max(float(goal[1]), 0.0), math.nextafter(h * emap.resolution, 0.0))
    gr, gc = emap.cell_of(gx, gy)
    if weight[gr, gc] != 0:
        g, parent = kernels.astar(weight, s_idx, gr * w + gc, BASE_WEIGHT)
        if g[gr * w + gc] != kernels.UNREACHED:
            return _unflatten(kernels.trace_path(parent, gr * w + gc), w)
    g, parent = kernels.dijkstra(weight, s_idx)
    alt = nearest_reachable(g, (h, w), emap.resolution, (float(goal[0]), float(goal[1])),
                            fallback_radius)
    if alt is None:
        raise PathError(f"no reachable cell within {fallback_radius} m of goal {tuple(goal)}")
    return _unflatten(kernels.trace_path(parent, alt), w)


# --------------------------------------------------------------------------
# motion
# --------------------------------------------------------------------------


def advance_profile(s: float, v: float, total: float, vmax: float, accel: float,
                    dt: float) -> tuple[float, float]:
    """Exact arc-length and speed after ``dt`` under a trapezoidal profile.

    Accelerates at ``accel`` up to ``vmax``, cruises, and brakes so that it
    stops exactly at ``total``. Piecewise closed form, so splitting ``dt``
    into smaller steps yields the same end state up to rounding.
    """
    t_left = dt
    for _ in range(8):
        rem = total - s
        if t_left <= 0 or rem <= 0:
            break
        stop_dist = v * v / (2.0 * accel)
        if stop_dist >= rem * (1.0 - 1e-12):
            # braking phase, stretched if the path got shorter than the stopping distance
            dec = max(accel, v * v / (2.0 * rem))
            t_stop = v / dec
            if t_stop <= t_left:
                return total, 0.0
            s += v * t_left - 0.5 * dec * t_left * t_left
            v -= dec * t_left
            return min(s, total), v
        if v < vmax:
            t_v = (vmax - v) / accel
            t_b = (-2.0 * v + math.sqrt(2.0 * v * v + 4.0 * accel * rem)) / (2.0 * accel)
            phase = min(t_v, t_b)
            step = min(phase, t_left)
            s += v * step + 0.5 * accel * step * step
            v += accel * step
            t_left -= step
            if step == t_v:
                v = vmax
            continue
        cruise = (rem - vmax * vmax / (2.0 * accel)) / vmax
        step = min(cruise, t_left)
        s += vmax * step
        v = vmax
        t_left -= step
    return min(s, total), v


def trapezoid_duration(distance: float, vmax: float, accel: float) -> float:
    """Closed-form rest-to-rest traversal time."""
    if distance <= 0:
        return 0.0
    if distance >= vmax * vmax / accel:
        return distance / vmax + vmax / accel
    return 2.0 * math.sqrt(distance / accel)


@dataclass
class RobotState:
    pose: tuple[float, float]
    max_speed: float
    max_accel: float
    current_path: list[tuple[int, int]] = field(default_factory=list)
    velocity: tuple[float, float] = (0.0, 0.0)
    speed: float = 0.0
    odometer: float = 0.0
    _vertices: np.ndarray | None = field(default=None, repr=False)
    _cum: np.ndarray | None = field(default=None, repr=False)
    _cells: list[tuple[int, int]] = field(default_factory=list, repr=False)
    _s: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.max_speed <= 0 or self.max_accel <= 0:
            raise ValueError("max_speed and max_accel must be positive")

    def set_path(self, cells: list[tuple[int, int]], resolution: float) -> None:
        """Follow ``cells`` from the current pose; the first cell may be the pose cell."""
        here = (int(math.floor(self.pose[1] / resolution)), int(math.floor(self.pose[0] / resolution)))
        cells = list(cells)
        if cells and cells[0] == here:
            cells = cells[1:]
        pts = [self.pose] + [((c + 0.5) * resolution, (r + 0.5) * resolution) for r, c in cells]
        verts = np.asarray(pts, dtype=np.float64)
        seg = np.hypot(*np.diff(verts, axis=0).T) if len(verts) > 1 else np.zeros(0)
        self._vertices = verts
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self._cells = cells
        self._s = 0.0
        self.current_path = list(cells)
        total = float(self._cum[-1])
        # a shortened path cannot demand more than the braking curve allows
        self.speed = min(self.speed, math.sqrt(2.0 * self.max_accel * total)) if total > 0 else 0.0

    def clear_path(self) -> None:
        self._vertices = None
        self._cum = None
        self._cells = []
        self.current_path = []
        self._s = 0.0
        self.speed = 0.0
        self.velocity = (0.0, 0.0)

    @property
    def path_length(self) -> float:
        return float(self._cum[-1]) if self._cum is not None else 0.0

    @property
    def remaining(self) -> float:
        return self.path_length - self._s

    @property
    def done(self) -> bool:
        return self._cum is None or self._s >= self.path_length

    def position_at(self, s: float) -> tuple[float, float]:
        cum = self._cum
        verts = self._vertices
        if s >= cum[-1]:
            return float(verts[-1, 0]), float(verts[-1, 1])
        i = int(np.searchsorted(cum, s, side="right")) - 1
        seg = cum[i + 1] - cum[i]
        f = (s - cum[i]) / seg if seg > 0 else 0.0
        p = verts[i] + f * (verts[i + 1] - verts[i])
        return float(p[0]), float(p[1])

    def direction_at(self, s: float) -> tuple[float, float]:
        cum = self._cum
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(cum) - 2)
        d = self._vertices[i + 1] - self._vertices[i]
        n = math.hypot(d[0], d[1])
        return (float(d[0] / n), float(d[1] / n)) if n > 0 else (0.0, 0.0)


def step_motion(robot: RobotState, dt: float, resolution: float | None = None) -> RobotState:
    """Advance ``robot`` along its path by ``dt`` seconds (in place)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if robot.done:
        robot.speed = 0.0
        robot.velocity = (0.0, 0.0)
        return robot
    total = robot.path_length
    s_new, v_new = advance_profile(robot._s, robot.speed, total, robot.max_speed,
                                   robot.max_accel, dt)
    robot.odometer += s_new - robot._s
    robot._s = s_new
    robot.speed = v_new
    robot.pose = robot.position_at(s_new)
    if s_new >= total:
        robot.speed = 0.0
        robot.velocity = (0.0, 0.0)
    else:
        ux, uy = robot.direction_at(s_new)
        robot.velocity = (v_new * ux, v_new * uy)
    if resolution is not None and robot._cells:
        # drop cells whose centre is already within half a cell of the travelled arc
        passed = int(np.searchsorted(robot._cum, s_new + 0.5 * resolution, side="right")) - 1
        robot.current_path = robot._cells[max(passed, 0):]
    return robot
