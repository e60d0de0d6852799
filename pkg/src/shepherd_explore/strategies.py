"""Exploration strategies behind one decision interface.

* ``froshe``  - shepherding pipeline: virtual sheep, batching, predator poses.
* ``greedy``  - each robot heads for its path-cost-nearest frontier cell.
* ``utility`` - sequential frontier assignment with visibility discounting
  in the style of coordinated utility-based exploration. This one is a
  reconstruction from a short description, so treat comparisons against
  it as directional.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .batching import AssignmentParams, assign_batches, batch_swarm
from .mapping import ExplorationMap, FrontierSet
from .monitor import RateMonitor
from .planner import BASE_WEIGHT, PathError, plan_path, traversal_weights
from .shepherd import Mode, ShepherdConfig, ShepherdDecision, decide
from .swarm import SwarmParams, SwarmState, allocate_virtual_sheep, estimate_step


@dataclass(frozen=True)
class PlannerParams:
    unknown_cost: float = 1.0
    robot_inflation: float = 1.0
    fallback_radius: float | None = None  # defaults to 2 * f_res


@dataclass(frozen=True)
class BatchingParams:
    linkage_distance: float | None = None  # defaults to 1.2 * f_res
    method: str = "linkage"


@dataclass(frozen=True)
class MonitorParams:
    fma_window: int = 50
    sma_window: int = 200
    adjust_factor: float = 0.2
    trigger: str = "level"


@dataclass(frozen=True)
class UtilityParams:
    cost_weight: float = 1.0


@dataclass(frozen=True)
class StrategyParams:
    swarm: SwarmParams = field(default_factory=SwarmParams)
    assignment: AssignmentParams = field(default_factory=AssignmentParams)
    batching: BatchingParams = field(default_factory=BatchingParams)
    shepherd: ShepherdConfig = field(default_factory=ShepherdConfig)
    monitor: MonitorParams = field(default_factory=MonitorParams)
    planner: PlannerParams = field(default_factory=PlannerParams)
    utility: UtilityParams = field(default_factory=UtilityParams)

    @property
    def fallback_radius(self) -> float:
        r = self.planner.fallback_radius
        return 2.0 * self.swarm.f_res if r is None else r

    @property
    def linkage_distance(self) -> float:
        d = self.batching.linkage_distance
        return 1.2 * self.swarm.f_res if d is None else d


@dataclass(frozen=True, eq=False)
class StrategyDecisionInput:
    emap: ExplorationMap  # live shared map (read only for strategies)
    snapshot: ExplorationMap  # map copy taken with the frontier snapshot
    frontiers: FrontierSet
    robot_poses: tuple[tuple[float, float], ...]
    robot_idle: tuple[bool, ...]
    tick: int
    time: float


@dataclass
class Directive:
    """A new order for one robot: follow ``path`` then visit ``waypoints[1:]``."""

    waypoints: list[tuple[float, float]]
    path: list[tuple[int, int]]
    mode: Mode | None = None
    target_cell: tuple[int, int] | None = None


@dataclass
class StrategyOutput:
    directives: list[Directive | None]
    complete: bool = False


class Strategy:
    name = "base"

    def __init__(self, params: StrategyParams, n_robots: int, bounds: tuple[float, float],
                 rng: np.random.Generator, resolution: float):
        self.params = params
        self.n_robots = n_robots
        self.bounds = bounds
        self.rng = rng
        self.resolution = resolution
        self.blacklist: set[tuple[int, int]] = set()
        self.trace_rows: list[tuple] = []
        self.debug = False

    def update(self, inp: StrategyDecisionInput) -> StrategyOutput:  # pragma: no cover
        raise NotImplementedError

    # shared helpers -------------------------------------------------------

    def _weights(self, inp: StrategyDecisionInput, i: int) -> np.ndarray:
        pose = inp.robot_poses[i]
        others = [p for j, p in enumerate(inp.robot_poses) if j != i]
        start = inp.emap.cell_of(*pose)
        return traversal_weights(inp.emap, self.params.planner.unknown_cost, others,
                                 self.params.planner.robot_inflation, keep_free=[start])

    def _costs_from(self, inp: StrategyDecisionInput, i: int):
        w = self._weights(inp, i)
        r, c = inp.emap.cell_of(*inp.robot_poses[i])
        g, parent = kernels.dijkstra(w, r * inp.emap.width + c)
        return g, parent

    def _candidate_mask(self, inp: StrategyDecisionInput) -> np.ndarray:
        cells = inp.frontiers.cells
        if not self.blacklist or len(cells) == 0:
            return np.ones(len(cells), dtype=bool)
        return np.array([(int(r), int(c)) not in self.blacklist for r, c in cells], dtype=bool)

    def _nearest_frontier(self, inp: StrategyDecisionInput, i: int) -> Directive | None:
        """Path to the cheapest reachable frontier; blacklists one the robot stands on."""
        cells = inp.frontiers.cells
        if len(cells) == 0:
            return None
        g, parent = self._costs_from(inp, i)
        w = inp.emap.width
        flat = cells[:, 0] * w + cells[:, 1]
        here = inp.emap.cell_of(*inp.robot_poses[i])
        for _ in range(2):
            cost = np.where(self._candidate_mask(inp), g[flat], kernels.UNREACHED)
            j = int(np.argmin(cost))
            if cost[j] == kernels.UNREACHED:
                return None
            tgt = (int(cells[j, 0]), int(cells[j, 1]))
            if tgt != here:
                path = [divmod(k, w) for k in kernels.trace_path(parent, int(flat[j]))]
                x, y = (tgt[1] + 0.5) * self.resolution, (tgt[0] + 0.5) * self.resolution
                return Directive([(x, y)], path, None, tgt)
            # standing on a frontier that sensing cannot resolve from here
            self.blacklist.add(tgt)
        return None


# --------------------------------------------------------------------------
# greedy nearest frontier
# --------------------------------------------------------------------------


class GreedyStrategy(Strategy):
    name = "greedy"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.targets: list[tuple[int, int] | None] = [None] * self.n_robots

    def update(self, inp: StrategyDecisionInput) -> StrategyOutput:
        if len(inp.frontiers) == 0:
            return StrategyOutput([None] * self.n_robots, complete=True)
        fmask = inp.frontiers.mask(inp.emap.shape)
        out: list[Directive | None] = []
        for i in range(self.n_robots):
            tgt = self.targets[i]
            stale = tgt is None or inp.robot_idle[i] or not fmask[tgt] or tgt in self.blacklist
            if not stale:
                out.append(None)
                continue
            if tgt is not None and inp.robot_idle[i] and inp.emap.cell_of(*inp.robot_poses[i]) == tgt:
                if fmask[tgt]:
                    self.blacklist.add(tgt)
            d = self._nearest_frontier(inp, i)
            self.targets[i] = d.target_cell if d else None
            out.append(d)
        return StrategyOutput(out)


# --------------------------------------------------------------------------
# sequential utility assignment
# --------------------------------------------------------------------------


def sequential_utility_assignment(costs: np.ndarray, frontier_xy: np.ndarray, L: float,
                                  cost_scale: float, cost_weight: float = 1.0) -> list[int]:
    """Assign robots in index order to the frontier maximising utility minus cost.

    ``costs[i, j]`` is robot i's travel cost (metres) to frontier j, ``inf``
    when unreachable. Every frontier starts with utility 1; after a frontier
    t is chosen, each frontier f within ``L`` of t loses ``1 - |f - t| / L``.
    Returns -1 for robots with no reachable frontier.
    """
    n_r, n_f = costs.shape
    util = np.ones(n_f)
    out = []
    for i in range(n_r):
        reach = np.isfinite(costs[i])
        if not reach.any():
            out.append(-1)
            continue
        score = np.where(reach, util - cost_weight * np.where(reach, costs[i], 0.0) / cost_scale,
                         -np.inf)
        j = int(np.argmax(score))
        out.append(j)
        d = np.hypot(*(frontier_xy - frontier_xy[j]).T)
        util = util - np.where(d < L, 1.0 - d / L, 0.0)
    return out


class UtilityStrategy(Strategy):
    name = "utility"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.targets: list[tuple[int, int] | None] = [None] * self.n_robots
        self.last_version = -1

    def update(self, inp: StrategyDecisionInput) -> StrategyOutput:
        if len(inp.frontiers) == 0:
            return StrategyOutput([None] * self.n_robots, complete=True)
        fmask = inp.frontiers.mask(inp.emap.shape)
        for i in range(self.n_robots):
            tgt = self.targets[i]
            if tgt is not None and inp.robot_idle[i] and inp.emap.cell_of(*inp.robot_poses[i]) == tgt:
                if fmask[tgt]:
                    self.blacklist.add(tgt)
        need = [
            inp.robot_idle[i] or self.targets[i] is None or not fmask[self.targets[i]]
            or self.targets[i] in self.blacklist
            for i in range(self.n_robots)
        ]
        if not any(need) and inp.frontiers.map_version == self.last_version:
            return StrategyOutput([None] * self.n_robots)
        if not any(need):
            return StrategyOutput([None] * self.n_robots)
        self.last_version = inp.frontiers.map_version

        cells = inp.frontiers.cells
        keep = self._candidate_mask(inp)
        w = inp.emap.width
        flat = cells[:, 0] * w + cells[:, 1]
        unit_m = self.resolution / (kernels.STRAIGHT * BASE_WEIGHT)
        costs = np.full((self.n_robots, len(cells)), np.inf)
        parents = []
        for i in range(self.n_robots):
            g, parent = self._costs_from(inp, i)
            parents.append(parent)
            gi = g[flat]
            ok = keep & (gi != kernels.UNREACHED)
            here = inp.emap.cell_of(*inp.robot_poses[i])
            ok &= ~((cells[:, 0] == here[0]) & (cells[:, 1] == here[1]))
            costs[i, ok] = gi[ok] * unit_m
        xy = np.stack([(cells[:, 1] + 0.5) * self.resolution,
                       (cells[:, 0] + 0.5) * self.resolution], axis=1)
        diag = math.hypot(*self.bounds)
        picks = sequential_utility_assignment(costs, xy, self.params.swarm.L, diag,
                                              self.params.utility.cost_weight)
        out: list[Directive | None] = []
        for i, j in enumerate(picks):
            if j < 0:
                self.targets[i] = None
                out.append(None)
                continue
            tgt = (int(cells[j, 0]), int(cells[j, 1]))
            if tgt == self.targets[i] and not need[i]:
                out.append(None)
                continue
            self.targets[i] = tgt
            path = [divmod(k, w) for k in kernels.trace_path(parents[i], int(flat[j]))]
            out.append(Directive([(float(xy[j, 0]), float(xy[j, 1]))], path, None, tgt))
        return StrategyOutput(out)


# --------------------------------------------------------------------------
# shepherding
# --------------------------------------------------------------------------


class FrosheStrategy(Strategy):
    name = "froshe"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        p = self.params
        diag = math.hypot(*self.bounds)
        lo = min(p.swarm.f_res, diag)
        self.monitors = [
            RateMonitor(p.shepherd.d_t_initial, (lo, diag), p.monitor.fma_window,
                        p.monitor.sma_window, p.monitor.adjust_factor,
                        trigger=p.monitor.trigger)
            for _ in range(self.n_robots)
        ]
        self.swarm: SwarmState | None = None
        self.alloc_version = -1
        self.modes: list[Mode | None] = [None] * self.n_robots
        self.decisions: list[ShepherdDecision | None] = [None] * self.n_robots
        self.mode_switches = 0
        self.swarm_rows: list[tuple] = []
        self.monitor_rows: list[tuple] = []
        self.last_batches = []
        self.last_assignment: list[int] = []
        self.monitors_started = False

    def _same_plan(self, old: ShepherdDecision | None, new: ShepherdDecision) -> bool:
        # a reset that barely moves the goal keeps the robot on its current legs
        if old is None or old.mode is not new.mode:
            return False
        tol = self.params.shepherd.recommit_distance
        a, b = old.waypoint_sequence[-1], new.waypoint_sequence[-1]
        return math.hypot(a[0] - b[0], a[1] - b[1]) <= tol

    def _plan_decision(self, inp, i, dec: ShepherdDecision) -> Directive | None:
        pose = inp.robot_poses[i]
        w = self._weights(inp, i)
        wps = list(dec.waypoint_sequence)
        arrive = 2.0 * self.resolution
        while wps and math.hypot(wps[0][0] - pose[0], wps[0][1] - pose[1]) <= arrive:
            wps.pop(0)
        while wps:
            try:
                path = plan_path(inp.emap, pose, wps[0], weight=w,
                                 fallback_radius=self.params.fallback_radius)
            except PathError:
                wps.pop(0)
                continue
            if len(path) > 1:
                return Directive(wps, path, dec.mode)
            wps.pop(0)
        return None

    def update(self, inp: StrategyDecisionInput) -> StrategyOutput:
        p = self.params
        dt = 1.0 / p.swarm.r_s
        reset = inp.frontiers.map_version != self.alloc_version
        if reset:
            self.swarm = allocate_virtual_sheep(inp.frontiers, inp.snapshot, p.swarm)
            self.alloc_version = inp.frontiers.map_version
        else:
            self.swarm = estimate_step(self.swarm, inp.robot_poses, dt, self.rng)
        swarm = self.swarm
        if len(swarm) == 0:
            return StrategyOutput([None] * self.n_robots, complete=True)
        if self.debug:
            for k, ((x, y), wt) in enumerate(zip(swarm.positions, swarm.weights)):
                self.swarm_rows.append((inp.tick, k, float(x), float(y), int(wt)))

        batches = batch_swarm(swarm, p.linkage_distance, p.batching.method, k=self.n_robots,
                              seed=int(self.rng.integers(2**31)) if p.batching.method == "kmeans" else 0)
        assignment = assign_batches(batches, inp.robot_poses, p.assignment)
        self.last_batches = batches
        self.last_assignment = assignment

        explored = inp.emap.explored_cell_count
        total = inp.emap.width * inp.emap.height
        if not self.monitors_started:
            # the first increment is measured from the map at start, not from zero
            for mon in self.monitors:
                mon.last_count = explored
            self.monitors_started = True
        for i, mon in enumerate(self.monitors):
            mon.record(explored)
            if self.modes[i] is not None:
                mon.note_mode(self.modes[i])
            event = mon.maybe_switch() if mon.mode_history else False
            if self.debug:
                self.monitor_rows.append((inp.tick, i, 100.0 * explored / total,
                                          mon.delta_e_history[-1], mon.fma, mon.sma, mon.d_t,
                                          int(event)))

        out: list[Directive | None] = []
        for i in range(self.n_robots):
            if not (reset or inp.robot_idle[i] or self.decisions[i] is None):
                out.append(None)
                continue
            dec = decide(assignment[i], batches, swarm.positions, inp.robot_poses[i],
                         self.monitors[i].d_t, p.shepherd, self.bounds)
            if not inp.robot_idle[i] and self._same_plan(self.decisions[i], dec):
                out.append(None)
                continue
            directive = self._plan_decision(inp, i, dec)
            if directive is None:
                # every shepherding leg is unplannable or already reached
                directive = self._nearest_frontier(inp, i)
                if directive is None and not inp.robot_idle[i]:
                    out.append(None)
                    continue
            if directive is not None and directive.mode is not None:
                if self.modes[i] is not None and directive.mode is not self.modes[i]:
                    self.mode_switches += 1
                self.modes[i] = directive.mode
            self.decisions[i] = dec
            if self.debug:
                wp = dec.waypoint_sequence
                self.trace_rows.append((inp.tick, i, dec.mode.value,
                                        *[float(v) for pt in wp for v in pt]))
            out.append(directive)
        return StrategyOutput(out)


STRATEGIES = {
    "froshe": FrosheStrategy,
    "greedy": GreedyStrategy,
    "utility": UtilityStrategy,
}


def make_strategy(name: str, *args, **kwargs) -> Strategy:
    try:
        cls = STRATEGIES[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None
    return cls(*args, **kwargs)
