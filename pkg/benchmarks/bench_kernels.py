"""Time the compiled and pure-numpy kernel variants side by side.

    python benchmarks/bench_kernels.py [--repeat N] [--side METRES]

Both variants are called directly (``_nb`` and ``_np``), so the environment
flag does not matter here. Each result pair is also checked for equality.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from shepherd_explore import kernels
from shepherd_explore._accel import HAS_NUMBA
from shepherd_explore.environment import EnvironmentKind, ScenarioSpec, _ray_directions, generate_world
from shepherd_explore.planner import BASE_WEIGHT


def _best_of(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(side: float):
    world = generate_world(ScenarioSpec(EnvironmentKind.FOREST, side_length=side,
                                        tree_density=0.05, rng_seed=1))
    occ = world._occ_u8
    res = world.resolution
    x, y = world.spawns[0]
    dirs = _ray_directions(360)
    lens = np.full(360, 10.0 / res)
    half = int(math.ceil(lens.max())) + 2
    weight = np.where(world.occupied, 0, BASE_WEIGHT).astype(np.int64)
    h, w = world.shape
    start = int(h // 2) * w + int(w // 2)
    goal = 1 * w + 1 + w  # near a corner, inside the boundary ring
    goal = goal if weight.ravel()[goal] else start
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, side, size=(400, 2))
    return {
        "cast_rays (360 rays, 10 m)": (
            lambda: kernels._cast_rays_nb(occ, x / res, y / res, dirs, lens, half),
            lambda: kernels._cast_rays_np(occ, x / res, y / res, dirs, lens, half),
        ),
        "astar (centre to corner)": (
            lambda: kernels._search_nb(weight, start, goal, BASE_WEIGHT),
            lambda: kernels._search_np(weight, start, goal, BASE_WEIGHT),
        ),
        "dijkstra (full grid)": (
            lambda: kernels._search_nb(weight, start, -1, BASE_WEIGHT),
            lambda: kernels._search_np(weight, start, -1, BASE_WEIGHT),
        ),
        "thin_points (400 pts, 2.5 m)": (
            lambda: kernels._thin_points_nb(pts, 6.25),
            lambda: kernels._thin_points_np(pts, 6.25),
        ),
    }


def _same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--side", type=float, default=60.0)
    args = ap.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed; only the numpy variant would run")
        return 1
    print(f"grid side {args.side:g} m, best of {args.repeat}")
    print(f"{'kernel':32s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}  equal")
    for name, (nb, npy) in _cases(args.side).items():
        out_nb = nb()  # also triggers compilation outside the timed region
        out_np = npy()
        t_nb = _best_of(nb, args.repeat)
        t_np = _best_of(npy, args.repeat)
        print(f"{name:32s} {1e3 * t_nb:10.3f} {1e3 * t_np:10.3f} {t_np / t_nb:8.1f}  "
              f"{_same(out_nb, out_np)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
