"""Swarm batching and the gain-versus-distance batch assignment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .swarm import SwarmState


class AssignmentError(ValueError):
    """No batch is available to assign."""


@dataclass(frozen=True)
class SwarmBatch:
    centroid: tuple[float, float]
    total_weight: int
    member_indices: tuple[int, ...]


@dataclass(frozen=True)
class AssignmentParams:
    lambda_m: float = 1.0
    lambda_d: float = 1.0
    exclusive: bool = True

    def __post_init__(self):
        if self.lambda_m < 0 or self.lambda_d < 0:
            raise ValueError("lambda_m and lambda_d must be non-negative")
        if self.lambda_m == 0 and self.lambda_d == 0:
            raise ValueError("lambda_m and lambda_d cannot both be zero")


def _make_batches(state: SwarmState, labels: np.ndarray) -> list[SwarmBatch]:
    out = []
    for lab in np.unique(labels):
        idx = np.nonzero(labels == lab)[0]
        cx, cy = state.positions[idx].mean(axis=0)
        out.append(SwarmBatch((float(cx), float(cy)), int(state.weights[idx].sum()),
                              tuple(int(i) for i in idx)))
    # heaviest first; ties by row-major centroid (y, then x)
    out.sort(key=lambda b: (-b.total_weight, b.centroid[1], b.centroid[0], b.member_indices))
    return out


def single_linkage_labels(positions: np.ndarray, linkage_distance: float) -> np.ndarray:
    """Connected components of the graph joining points at distance <= threshold."""
    diff = positions[:, None, :] - positions[None, :, :]
    adj = np.hypot(diff[..., 0], diff[..., 1]) <= linkage_distance
    _, labels = connected_components(csr_matrix(adj), directed=False)
    return labels


def batch_swarm(state: SwarmState, linkage_distance: float, method: str = "linkage",
                k: int | None = None, seed: int = 0) -> list[SwarmBatch]:
    """Cluster the estimated swarm into batches.

    ``method="linkage"`` (default) is distance-threshold single linkage;
    ``method="kmeans"`` runs seeded k-means with ``k`` clusters.
    """
    if linkage_distance <= 0:
        raise ValueError("linkage_distance must be positive")
    n = len(state)
    if n == 0:
        return []
    if method == "linkage":
        labels = single_linkage_labels(state.positions, linkage_distance)
    elif method == "kmeans":
        kk = max(1, min(int(k or 1), n))
        _, labels = kmeans2(state.positions, kk, minit="++", seed=seed)
    else:
        raise ValueError(f"unknown batching method {method!r}")
    return _make_batches(state, labels)


def batch_scores(batches: list[SwarmBatch], robot_pose, params: AssignmentParams) -> np.ndarray:
    """Normalised gain minus normalised distance for one robot over all batches."""
    cents = np.array([b.centroid for b in batches], dtype=np.float64)
    w = np.array([b.total_weight for b in batches], dtype=np.float64)
    d = np.hypot(cents[:, 0] - robot_pose[0], cents[:, 1] - robot_pose[1])
    w_max = w.max()
    d_max = d.max()
    gain = w / w_max if w_max > 0 else np.zeros_like(w)
    cost = d / d_max if d_max > 0 else np.zeros_like(d)
    return params.lambda_m * gain - params.lambda_d * cost


def assign_batches(batches: list[SwarmBatch], robot_poses, params: AssignmentParams) -> list[int]:
    """Index of the best-scoring batch for every robot.

    Ties go to the earliest batch in ``batches``. With ``params.exclusive``
    and at least as many batches as robots, each robot in turn removes its
    pick from the remaining robots' menus.
    """
    if not batches:
        raise AssignmentError("no batches to assign")
    poses = [tuple(p) for p in robot_poses]
    exclusive = params.exclusive and len(batches) >= len(poses)
    taken = np.zeros(len(batches), dtype=bool)
    out = []
    for pose in poses:
        s = batch_scores(batches, pose, params)
        if exclusive:
            s = np.where(taken, -np.inf, s)
        best = int(np.argmax(s))
        taken[best] = True
        out.append(best)
    return out
