import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shepherd_explore import kernels
from shepherd_explore.mapping import FREE, OCCUPIED, ExplorationMap
from shepherd_explore.planner import (
    BASE_WEIGHT,
    PathError,
    RobotState,
    advance_profile,
    path_cost,
    plan_path,
    step_motion,
    trapezoid_duration,
    traversal_weights,
)

from conftest import random_cells
from oracles import dijkstra_grid


def _free_map(n, res=0.5):
    return ExplorationMap(n, n, res, np.full((n, n), FREE, np.uint8))


def _centre(emap, r, c):
    return ((c + 0.5) * emap.resolution, (r + 0.5) * emap.resolution)


def _is_valid_path(emap, weight, path):
    for (r0, c0), (r1, c1) in zip(path, path[1:]):
        if max(abs(r1 - r0), abs(c1 - c0)) != 1 or weight[r1, c1] == 0:
            return False
        if r0 != r1 and c0 != c1 and (weight[r0, c1] == 0 or weight[r1, c0] == 0):
            return False
    return True


def test_straight_line_on_open_ground():
    emap = _free_map(10)
    path = plan_path(emap, _centre(emap, 2, 1), _centre(emap, 2, 8))
    assert path == [(2, c) for c in range(1, 9)]


def test_zero_length_path():
    emap = _free_map(5)
    p = _centre(emap, 2, 2)
    assert plan_path(emap, p, p) == [(2, 2)]


def test_no_corner_cutting():
    cells = np.full((3, 3), FREE, np.uint8)
    cells[0, 1] = OCCUPIED
    emap = ExplorationMap(3, 3, 1.0, cells)
    path = plan_path(emap, (0.5, 0.5), (2.5, 0.5))
    assert (1, 1) in path and (0, 1) not in path


def test_blocked_goal_falls_back_to_nearest_reachable():
    cells = np.full((9, 9), FREE, np.uint8)
    cells[4, 6:] = OCCUPIED
    cells[4:, 6] = OCCUPIED
    emap = ExplorationMap(9, 9, 1.0, cells)
    path = plan_path(emap, (0.5, 0.5), (8.5, 8.5), fallback_radius=3.0)
    end = path[-1]
    assert cells[end] == FREE
    assert math.dist((end[1] + 0.5, end[0] + 0.5), (8.5, 8.5)) <= 3.0


def test_unreachable_goal_raises():
    cells = np.full((9, 9), FREE, np.uint8)
    cells[:, 4] = OCCUPIED
    emap = ExplorationMap(9, 9, 1.0, cells)
    with pytest.raises(PathError):
        plan_path(emap, (0.5, 0.5), (8.5, 8.5), fallback_radius=1.0)


def test_start_in_obstacle_raises():
    cells = np.full((4, 4), FREE, np.uint8)
    cells[0, 0] = OCCUPIED
    with pytest.raises(PathError):
        plan_path(ExplorationMap(4, 4, 1.0, cells), (0.5, 0.5), (3.5, 3.5))


def test_unknown_cost_validation_and_scaling():
    emap = ExplorationMap(3, 3, 1.0)
    with pytest.raises(ValueError):
        traversal_weights(emap, 0.5)
    assert np.all(traversal_weights(emap, 2.0) == 2 * BASE_WEIGHT)


def test_robot_inflation_blocks_cells_but_not_own_escape():
    emap = _free_map(20, 0.5)
    w = traversal_weights(emap, 1.0, avoid=[(5.0, 5.0)], inflation=1.0)
    assert w[emap.cell_of(5.0, 5.0)] == 0
    # a robot standing inside that disc is not walled in by it
    start = emap.cell_of(5.4, 5.0)
    w2 = traversal_weights(emap, 1.0, avoid=[(5.0, 5.0)], inflation=1.0, keep_free=[start])
    assert w2[emap.cell_of(5.0, 5.0)] != 0


@pytest.mark.parametrize("seed", range(100))
def test_path_cost_equals_dijkstra_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 25))
    cells = random_cells(rng, n, n, float(rng.uniform(0, 0.5)), float(rng.uniform(0, 0.3)))
    emap = ExplorationMap(n, n, 0.5, cells)
    unknown_cost = float(rng.choice([1.0, 1.5, 3.0]))
    weight = traversal_weights(emap, unknown_cost)
    open_cells = np.argwhere(weight != 0)
    if len(open_cells) < 2:
        return
    (sr, sc), (gr, gc) = open_cells[rng.choice(len(open_cells), 2, replace=False)]
    dist = dijkstra_grid(weight, int(sr * n + sc), kernels.STRAIGHT, kernels.DIAGONAL)
    goal_d = dist[gr * n + gc]
    try:
        path = plan_path(emap, _centre(emap, sr, sc), _centre(emap, gr, gc),
                         unknown_cost=unknown_cost, fallback_radius=0.0)
    except PathError:
        assert goal_d == math.inf
        return
    assert path[0] == (sr, sc) and path[-1] == (gr, gc)
    assert _is_valid_path(emap, weight, path)
    assert path_cost(weight, path) == goal_d


def test_trapezoid_example_duration():
    # 10 m at 4 m/s, 2 m/s^2: 2 s up (4 m), 0.5 s cruise (2 m), 2 s down (4 m)
    assert trapezoid_duration(10.0, 4.0, 2.0) == pytest.approx(4.5)
    assert trapezoid_duration(10.0, 2.0, 1.0) == pytest.approx(7.0)
    assert trapezoid_duration(5.0, 1.0, 1.0) == pytest.approx(6.0)
    # triangular profile when the cruise speed is never reached
    assert trapezoid_duration(1.0, 2.0, 1.0) == pytest.approx(2.0)
    assert trapezoid_duration(0.0, 2.0, 1.0) == 0.0


def _simulate(total, vmax, accel, dt):
    s = v = t = 0.0
    while s < total and t < 1e4:
        s, v = advance_profile(s, v, total, vmax, accel, dt)
        t += dt
    return t, s, v


@pytest.mark.parametrize("total,vmax,accel", [(10.0, 2.0, 1.0), (3.0, 4.0, 2.0), (25.0, 1.0, 1.0)])
def test_profile_reaches_goal_at_closed_form_time(total, vmax, accel):
    dt = 1e-3
    t, s, v = _simulate(total, vmax, accel, dt)
    assert s == total and v == 0.0
    assert abs(t - trapezoid_duration(total, vmax, accel)) <= dt + 1e-9


@given(st.floats(0.1, 40), st.floats(0.2, 5), st.floats(0.2, 5), st.floats(0.01, 3))
def test_halving_dt_gives_same_state(total, vmax, accel, T):
    def run(n, dt):
        s = v = 0.0
        for _ in range(n):
            s, v = advance_profile(s, v, total, vmax, accel, dt)
        return s, v

    s1, v1 = run(1, T)
    s2, v2 = run(2, T / 2)
    assert abs(s1 - s2) <= 1e-6 and abs(v1 - v2) <= 1e-6
    assert 0 <= v1 <= vmax + 1e-12 and s1 <= total


def test_robot_follows_path_and_stops():
    robot = RobotState(pose=(0.25, 0.25), max_speed=1.0, max_accel=1.0)
    robot.set_path([(0, c) for c in range(0, 11)], 0.5)
    assert robot.path_length == pytest.approx(5.0)
    t = 0.0
    while not robot.done:
        step_motion(robot, 0.1, 0.5)
        t += 0.1
    assert robot.pose == pytest.approx((5.25, 0.25))
    assert robot.odometer == pytest.approx(5.0)
    assert t == pytest.approx(trapezoid_duration(5.0, 1.0, 1.0), abs=0.1 + 1e-9)
    assert robot.velocity == (0.0, 0.0) and robot.current_path == []


def test_zero_length_path_is_done_immediately():
    robot = RobotState(pose=(1.25, 1.25), max_speed=1.0, max_accel=1.0)
    robot.set_path([(2, 2)], 0.5)
    assert robot.done
    step_motion(robot, 0.1)
    assert robot.pose == (1.25, 1.25)


def test_motion_validation():
    with pytest.raises(ValueError):
        RobotState(pose=(0, 0), max_speed=0, max_accel=1)
    with pytest.raises(ValueError):
        step_motion(RobotState(pose=(0, 0), max_speed=1, max_accel=1), 0.0)
