import math

import numpy as np
import pytest

from shepherd_explore import kernels
from shepherd_explore.mapping import FREE, ExplorationMap, detect_frontiers
from shepherd_explore.planner import traversal_weights
from shepherd_explore.shepherd import Mode, ShepherdConfig
from shepherd_explore.strategies import (
    STRATEGIES,
    BatchingParams,
    FrosheStrategy,
    GreedyStrategy,
    StrategyDecisionInput,
    StrategyParams,
    UtilityStrategy,
    make_strategy,
    sequential_utility_assignment,
)

from conftest import random_cells
from oracles import dijkstra_grid


def _input(emap, poses, idle=None, tick=0):
    return StrategyDecisionInput(
        emap=emap, snapshot=emap.copy(), frontiers=detect_frontiers(emap),
        robot_poses=tuple(poses), robot_idle=tuple(idle or [True] * len(poses)),
        tick=tick, time=tick / 10.0,
    )


def _make(cls, n, emap, params=None, seed=0):
    bounds = (emap.width * emap.resolution, emap.height * emap.resolution)
    return cls(params or StrategyParams(), n, bounds, np.random.default_rng(seed), emap.resolution)


def test_registry_and_unknown_name():
    assert set(STRATEGIES) == {"froshe", "greedy", "utility"}
    with pytest.raises(ValueError):
        make_strategy("random", StrategyParams(), 1, (1, 1), np.random.default_rng(0), 0.5)


def test_all_strategies_report_completion_without_frontiers():
    emap = ExplorationMap(6, 6, 0.5, np.full((6, 6), FREE, np.uint8))
    for cls in (GreedyStrategy, UtilityStrategy, FrosheStrategy):
        out = _make(cls, 1, emap).update(_input(emap, [(1.25, 1.25)]))
        assert out.complete


@pytest.mark.parametrize("seed", range(30))
def test_greedy_picks_cheapest_frontier(seed):
    rng = np.random.default_rng(seed)
    n = 20
    cells = random_cells(rng, n, n, 0.3, 0.15)
    free = np.argwhere(cells == FREE)
    r, c = free[rng.integers(len(free))]
    emap = ExplorationMap(n, n, 0.5, cells)
    pose = ((c + 0.5) * 0.5, (r + 0.5) * 0.5)
    inp = _input(emap, [pose])
    d = _make(GreedyStrategy, 1, emap).update(inp).directives[0]
    weight = traversal_weights(emap, 1.0, keep_free=[(r, c)])
    dist = dijkstra_grid(weight, int(r * n + c), kernels.STRAIGHT, kernels.DIAGONAL)
    costs = [dist[fr * n + fc] for fr, fc in inp.frontiers.cells if (fr, fc) != (r, c)]
    best = min(costs, default=math.inf)
    if d is None:
        assert best == math.inf
        return
    tr, tc = d.target_cell
    assert dist[tr * n + tc] == best
    assert d.path[0] == (r, c) and d.path[-1] == (tr, tc)


def test_greedy_keeps_target_while_it_is_a_frontier():
    cells = np.zeros((10, 10), np.uint8)
    cells[:, :5] = FREE
    emap = ExplorationMap(10, 10, 1.0, cells)
    g = _make(GreedyStrategy, 1, emap)
    first = g.update(_input(emap, [(1.5, 5.5)])).directives[0]
    assert first is not None
    again = g.update(_input(emap, [(2.5, 5.5)], idle=[False])).directives[0]
    assert again is None


def _utility_oracle(costs, xy, L, scale, w):
    util = [1.0] * costs.shape[1]
    picks = []
    for i in range(costs.shape[0]):
        best, arg = -math.inf, -1
        for j in range(costs.shape[1]):
            if math.isinf(costs[i, j]):
                continue
            s = util[j] - w * costs[i, j] / scale
            if s > best:
                best, arg = s, j
        picks.append(arg)
        if arg < 0:
            continue
        for j in range(costs.shape[1]):
            d = math.dist(xy[j], xy[arg])
            if d < L:
                util[j] -= 1.0 - d / L
    return picks


@pytest.mark.parametrize("seed", range(60))
def test_utility_assignment_matches_exhaustive_loop(seed):
    rng = np.random.default_rng(seed)
    nr, nf = int(rng.integers(1, 4)), int(rng.integers(1, 7))
    costs = rng.uniform(0, 30, size=(nr, nf))
    costs[rng.uniform(size=costs.shape) < 0.15] = np.inf
    xy = rng.uniform(0, 20, size=(nf, 2))
    got = sequential_utility_assignment(costs, xy, 10.0, 40.0, 1.0)
    assert got == _utility_oracle(costs, xy.tolist(), 10.0, 40.0, 1.0)


def test_utility_spreads_robots_over_distinct_frontiers():
    costs = np.array([[1.0, 1.2], [1.0, 1.2]])
    xy = np.array([[0.0, 0.0], [30.0, 0.0]])
    assert sequential_utility_assignment(costs, xy, 10.0, 40.0) == [0, 1]


def test_utility_strategy_directs_every_robot():
    cells = np.zeros((30, 30), np.uint8)
    cells[10:20, 10:20] = FREE
    emap = ExplorationMap(30, 30, 0.5, cells)
    u = _make(UtilityStrategy, 2, emap)
    out = u.update(_input(emap, [(7.25, 7.25), (7.75, 7.25)]))
    targets = [d.target_cell for d in out.directives]
    assert all(t is not None for t in targets) and targets[0] != targets[1]


def _ring_map(n=40, spread=False):
    cells = np.zeros((n, n), np.uint8)
    cells[15:25, 15:25] = FREE
    if spread:
        cells[2:6, 2:6] = FREE  # a second, far frontier pocket
    return ExplorationMap(n, n, 0.5, cells)


def test_froshe_scattered_batch_collects():
    emap = _ring_map()
    # one batch spanning the whole ring, wider than the smallest threshold
    p = StrategyParams(shepherd=ShepherdConfig(d_t_initial=0.5),
                       batching=BatchingParams(linkage_distance=20.0))
    f = _make(FrosheStrategy, 1, emap, p)
    # start in a corner of the free square, away from the collection point
    out = f.update(_input(emap, [(7.75, 7.75)]))
    d = out.directives[0]
    assert d.mode is Mode.COLLECTING and len(d.path) > 1
    assert f.trace_rows == [] and f.decisions[0].mode is Mode.COLLECTING


def test_froshe_compact_batch_herds():
    emap = _ring_map()
    p = StrategyParams(shepherd=ShepherdConfig(d_t_initial=50.0))
    f = _make(FrosheStrategy, 1, emap, p)
    d = f.update(_input(emap, [(10.25, 10.25)])).directives[0]
    assert d.mode is Mode.HERDING


def test_froshe_holds_directive_between_resets():
    emap = _ring_map()
    f = _make(FrosheStrategy, 1, emap)
    inp = _input(emap, [(10.25, 10.25)])
    assert f.update(inp).directives[0] is not None
    nxt = StrategyDecisionInput(emap, inp.snapshot, inp.frontiers, inp.robot_poses, (False,), 1, 0.1)
    assert f.update(nxt).directives[0] is None


def test_froshe_exclusive_assignment_separates_robots():
    emap = _ring_map(spread=True)
    f = _make(FrosheStrategy, 2, emap)
    f.update(_input(emap, [(10.25, 10.25), (10.75, 10.25)]))
    a = f.last_assignment
    assert len(set(a)) == 2


def test_froshe_debug_rows():
    emap = _ring_map()
    f = _make(FrosheStrategy, 1, emap)
    f.debug = True
    f.update(_input(emap, [(10.25, 10.25)]))
    assert f.trace_rows and f.swarm_rows and f.monitor_rows
    tick, robot, mode, *coords = f.trace_rows[0]
    assert (tick, robot) == (0, 0) and mode in ("Collecting", "Herding")
    assert len(coords) % 2 == 0
