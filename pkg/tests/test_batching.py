import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shepherd_explore.batching import (
    AssignmentError,
    AssignmentParams,
    SwarmBatch,
    assign_batches,
    batch_scores,
    batch_swarm,
)
from shepherd_explore.swarm import SwarmParams, SwarmState

from oracles import union_find_labels


def _state(pos, weights=None):
    pos = np.asarray(pos, dtype=np.float64).reshape(-1, 2)
    w = np.ones(len(pos), np.int64) if weights is None else np.asarray(weights, np.int64)
    return SwarmState(pos, w, 0, SwarmParams())


def _partition(batches):
    return sorted(tuple(sorted(b.member_indices)) for b in batches)


def test_close_pair_forms_one_batch():
    assert len(batch_swarm(_state([[0, 0], [1, 0]]), 3.0)) == 1


def test_far_pair_forms_two_batches():
    assert len(batch_swarm(_state([[0, 0], [10, 0]]), 3.0)) == 2


def test_empty_swarm_gives_no_batches():
    assert batch_swarm(_state(np.zeros((0, 2))), 3.0) == []


def test_batch_summary_fields():
    b = batch_swarm(_state([[0, 0], [2, 0], [1, 3]], [5, 7, 1]), 5.0)[0]
    assert b.total_weight == 13
    assert np.allclose(b.centroid, (1.0, 1.0))  # weight-blind mean


def test_batches_ordered_heaviest_first():
    bs = batch_swarm(_state([[0, 0], [20, 0], [40, 0]], [1, 9, 4]), 3.0)
    assert [b.total_weight for b in bs] == [9, 4, 1]


@pytest.mark.parametrize("seed", range(40))
def test_linkage_partition_matches_union_find(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 30, size=(int(rng.integers(1, 40)), 2))
    thr = float(rng.uniform(1, 8))
    bs = batch_swarm(_state(pts), thr)
    labels = union_find_labels(pts.tolist(), thr)
    want = {}
    for i, lab in enumerate(labels):
        want.setdefault(lab, []).append(i)
    assert _partition(bs) == sorted(tuple(v) for v in want.values())


def test_kmeans_switch_partitions_the_swarm(rng):
    pts = rng.uniform(0, 30, size=(25, 2))
    bs = batch_swarm(_state(pts), 3.0, method="kmeans", k=3, seed=1)
    members = sorted(i for b in bs for i in b.member_indices)
    assert members == list(range(25))
    assert _partition(bs) == _partition(batch_swarm(_state(pts), 3.0, method="kmeans", k=3,
                                                    seed=1))


def test_eq1_worked_example():
    a = SwarmBatch((10.0, 0.0), 100, (0,))
    b = SwarmBatch((50.0, 0.0), 200, (1,))
    s = batch_scores([a, b], (0.0, 0.0), AssignmentParams(1.0, 1.0))
    assert np.allclose(s, [0.3, 0.0])
    assert assign_batches([a, b], [(0.0, 0.0)], AssignmentParams(1.0, 1.0)) == [0]
    assert AssignmentParams().exclusive


def test_single_batch_takes_every_robot():
    a = SwarmBatch((5.0, 5.0), 3, (0,))
    assert assign_batches([a], [(0, 0), (9, 9), (3, 1)], AssignmentParams(2.0, 7.0,
                                                                          exclusive=True)) == [0, 0, 0]


def test_zero_distance_weight_picks_heaviest():
    bs = [SwarmBatch((1.0, 0.0), 1, (0,)), SwarmBatch((90.0, 0.0), 50, (1,))]
    assert assign_batches(bs, [(0, 0)], AssignmentParams(1.0, 0.0)) == [1]


def test_no_batches_is_an_error():
    with pytest.raises(AssignmentError):
        assign_batches([], [(0, 0)], AssignmentParams())


def test_lambda_validation():
    with pytest.raises(ValueError):
        AssignmentParams(0.0, 0.0)
    with pytest.raises(ValueError):
        AssignmentParams(-1.0, 1.0)


def test_exclusive_assignment_spreads_robots():
    bs = [SwarmBatch((10.0, 0.0), 10, (0,)), SwarmBatch((-10.0, 0.0), 9, (1,))]
    robots = [(0.0, 0.0), (0.0, 0.0)]
    assert assign_batches(bs, robots, AssignmentParams(1, 0.3, exclusive=False)) == [0, 0]
    assert assign_batches(bs, robots, AssignmentParams(1, 0.3, exclusive=True)) == [0, 1]


def _random_instance(rng):
    nb = int(rng.integers(1, 8))
    bs = [SwarmBatch(tuple(rng.uniform(-50, 50, 2)), int(rng.integers(1, 500)), (i,))
          for i in range(nb)]
    robots = [tuple(rng.uniform(-50, 50, 2)) for _ in range(int(rng.integers(1, 4)))]
    params = AssignmentParams(float(rng.uniform(0.1, 2)), float(rng.uniform(0, 2)),
                              exclusive=bool(rng.integers(2)))
    return bs, robots, params


@pytest.mark.parametrize("seed", range(100))
def test_argmax_invariant_under_scaling(seed):
    rng = np.random.default_rng(seed)
    bs, robots, params = _random_instance(rng)
    base = assign_batches(bs, robots, params)
    for alpha in (0.5, 2, 10):
        # float weights are fine here: only the normalised ratio matters
        heavier = [SwarmBatch(b.centroid, b.total_weight * alpha, b.member_indices) for b in bs]
        assert assign_batches(heavier, robots, params) == base
    for beta in (0.5, 2, 10):
        moved = [SwarmBatch(tuple(np.asarray(b.centroid) * beta), b.total_weight,
                            b.member_indices) for b in bs]
        rs = [tuple(np.asarray(r) * beta) for r in robots]
        assert assign_batches(moved, rs, params) == base


@pytest.mark.parametrize("seed", range(100))
def test_choice_attains_exhaustive_maximum(seed):
    rng = np.random.default_rng(1000 + seed)
    bs, robots, params = _random_instance(rng)
    picks = assign_batches(bs, robots, params)
    exclusive = params.exclusive and len(bs) >= len(robots)
    taken = set()
    for r, pick in zip(robots, picks):
        ws = [b.total_weight for b in bs]
        ds = [float(np.hypot(b.centroid[0] - r[0], b.centroid[1] - r[1])) for b in bs]
        menu = [j for j in range(len(bs)) if not (exclusive and j in taken)]
        best = max(params.lambda_m * ws[j] / max(ws) - params.lambda_d * ds[j] / max(ds)
                   for j in menu)
        got = params.lambda_m * ws[pick] / max(ws) - params.lambda_d * ds[pick] / max(ds)
        assert pick in menu
        assert got == pytest.approx(best, abs=1e-12)
        taken.add(pick)
    if exclusive:
        assert len(set(picks)) == len(picks)


@given(st.lists(st.tuples(st.floats(0, 50), st.floats(0, 50)), min_size=1, max_size=30),
       st.floats(0.5, 10))
def test_batches_partition_the_swarm(pts, thr):
    bs = batch_swarm(_state(pts), thr)
    members = sorted(i for b in bs for i in b.member_indices)
    assert members == list(range(len(pts)))
    for b in bs:
        assert b.total_weight == len(b.member_indices)
