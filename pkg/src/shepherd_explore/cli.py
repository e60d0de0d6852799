"""Command-line front end: single configs, seed suites and experiment matrices.

Outputs written to ``--out`` (default ``$SHEPHERD_EXPLORE_OUT`` or ``./results``):

* ``<stem>_seed<k>.csv``   per-run metrics, one row per tick
* ``summary.json``          per-run summaries plus aggregate statistics
* ``manifest.json``         every resolved run config; pass it back through
  ``--scenario`` to reproduce the CSVs byte for byte
* ``aggregate.csv`` and ``times.csv`` (matrix mode) box-plot-ready tables
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, SimConfig, config_from_dict, load_config, tomllib
from .engine import RunMetrics, aggregate_times, run, write_traces
from .environment import EnvironmentKind, GenerationError

log = logging.getLogger("shepherd_explore")

OUT_ENV = "SHEPHERD_EXPLORE_OUT"
MANIFEST_FORMAT = "shepherd-explore-manifest/1"

PRESETS = {
    "grass40": {"scenario": {"environment_kind": "GrassPlane", "side_length": 40.0}},
    "forest40": {"scenario": {"environment_kind": "Forest", "side_length": 40.0,
                              "tree_density": 0.05}},
    "forest60": {"scenario": {"environment_kind": "Forest", "side_length": 60.0,
                              "tree_density": 0.05}},
}

MATRIX_AXES = ("environment_kind", "side_length", "robot_count", "strategy")


class UsageError(Exception):
    pass


def _read_structured(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"malformed file {path}: {exc}") from exc


def _apply_overrides(cfg: SimConfig, args) -> SimConfig:
    if args.strategy is not None:
        cfg = replace(cfg, strategy=args.strategy)
    if args.robots is not None:
        try:
            cfg = replace(cfg, scenario=replace(cfg.scenario, robot_count=args.robots))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.repeat is not None:
        cfg = replace(cfg, repeat_count=args.repeat)
    if args.debug_traces:
        cfg = replace(cfg, debug_traces=True)
    return cfg


def _stem(cfg: SimConfig) -> str:
    s = cfg.scenario
    side = f"{s.side_length:g}".replace(".", "p")
    return f"{s.environment_kind.value}_{side}m_{s.robot_count}r_{cfg.strategy}"


def _expand(cfg: SimConfig) -> list[SimConfig]:
    """One resolved config per repeat; world seeds follow each run's master seed."""
    out = []
    for k in range(cfg.repeat_count):
        c = replace(cfg, master_seed=cfg.master_seed + k, repeat_count=1)
        out.append(c.resolved())
    return out


def load_plan(args) -> tuple[list[list[SimConfig]], bool]:
    """Groups of resolved run configs (one group per matrix cell) and a matrix flag."""
    if args.matrix:
        return _matrix_plan(Path(args.matrix), args), True
    src = args.scenario
    if src in PRESETS:
        return [_expand(_apply_overrides(config_from_dict(PRESETS[src]), args))], False
    path = Path(src)
    if path.suffix.lower() == ".json":
        data = _read_structured(path)
        if isinstance(data, dict) and data.get("format") == MANIFEST_FORMAT:
            return _manifest_plan(data, args), bool(data.get("matrix"))
    return [_expand(_apply_overrides(load_config(path), args))], False


def _manifest_plan(data: dict, args) -> list[list[SimConfig]]:
    if any(v is not None for v in (args.strategy, args.robots, args.seed, args.repeat)):
        raise UsageError("a manifest already fixes strategy, robots, seeds and repeats")
    groups: dict[str, list[SimConfig]] = {}
    for entry in data.get("runs", []):
        cfg = config_from_dict(entry["config"])
        if args.debug_traces:
            cfg = replace(cfg, debug_traces=True)
        groups.setdefault(entry.get("cell", "run"), []).append(cfg.resolved())
    if not groups:
        raise ConfigError("manifest lists no runs")
    return list(groups.values())


def _matrix_plan(path: Path, args) -> list[list[SimConfig]]:
    data = _read_structured(path)
    axes = data.pop("matrix", None)
    if not isinstance(axes, dict) or not axes:
        raise ConfigError(f"{path}: missing [matrix] table")
    unknown = set(axes) - set(MATRIX_AXES)
    if unknown:
        raise ConfigError(f"{path}: unknown matrix axis {', '.join(sorted(unknown))}")
    base = config_from_dict(data)
    base = _apply_overrides(base, args)
    values = []
    for name in MATRIX_AXES:
        v = axes.get(name)
        if v is None:
            v = [getattr(base, name) if name == "strategy" else getattr(base.scenario, name)]
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{path}: matrix axis {name} must be a non-empty list")
        values.append(v)
    groups = []
    for kind, side, n, strat in itertools.product(*values):
        try:
            scen = replace(base.scenario, environment_kind=EnvironmentKind(kind),
                           side_length=float(side), robot_count=int(n))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if scen.environment_kind is EnvironmentKind.GRASS_PLANE:
            scen = replace(scen, tree_density=0.0)
        cfg = replace(base, scenario=scen, strategy=strat)
        config_from_dict(cfg.to_dict())  # validates the cell
        groups.append(_expand(cfg))
    return groups


def _prepare_out(out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc


def _run_all(groups: list[list[SimConfig]], workers: int) -> list[list[RunMetrics]]:
    flat = [c for g in groups for c in g]
    if workers > 1 and len(flat) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, flat))
    else:
        results = []
        for i, c in enumerate(flat):
            log.info("run %d/%d: %s seed %d", i + 1, len(flat), _stem(c), c.master_seed)
            results.append(run(c))
    it = iter(results)
    return [[next(it) for _ in g] for g in groups]


def _cell_stats(runs: list[RunMetrics]) -> dict:
    agg = aggregate_times(r.time_or_cap() for r in runs)
    agg["dnf"] = sum(r.dnf for r in runs)
    return agg


def write_outputs(out: Path, groups, results, matrix: bool) -> dict:
    manifest_runs, summaries, cells = [], [], []
    for cfgs, runs in zip(groups, results):
        stem = _stem(cfgs[0])
        for cfg, m in zip(cfgs, runs):
            name = f"{stem}_seed{cfg.master_seed}"
            m.write_csv(out / f"{name}.csv")
            if cfg.debug_traces:
                write_traces(m, out, name)
            manifest_runs.append({"cell": stem, "csv": f"{name}.csv", "config": cfg.to_dict()})
            summaries.append({"cell": stem, "csv": f"{name}.csv", **m.summary()})
        s = cfgs[0].scenario
        cells.append({"cell": stem, "environment_kind": s.environment_kind.value,
                      "side_length": s.side_length, "robot_count": s.robot_count,
                      "strategy": cfgs[0].strategy, **_cell_stats(runs)})
    manifest = {"format": MANIFEST_FORMAT, "matrix": matrix, "runs": manifest_runs}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    summary = {"runs": summaries, "cells": cells}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if matrix:
        cols = ["cell", "environment_kind", "side_length", "robot_count", "strategy", "n", "dnf",
                "median", "mean", "q1", "q3", "iqr", "min", "max", "std"]
        with (out / "aggregate.csv").open("w", newline="") as fh:
            wr = csv.DictWriter(fh, cols, lineterminator="\n", extrasaction="ignore")
            wr.writeheader()
            wr.writerows(cells)
        with (out / "times.csv").open("w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["cell", "master_seed", "completion_time", "dnf"])
            for s in summaries:
                t = s["completion_time"] if s["completed"] else None
                wr.writerow([s["cell"], s["master_seed"], "" if t is None else f"{t:.6f}",
                             int(s["dnf"])])
    return summary


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="shepherd-explore",
        description="Run multi-robot frontier exploration simulations.",
    )
    src = p.add_argument_group("input (one of)")
    src.add_argument("--scenario", metavar="FILE",
                     help="TOML/JSON config, an emitted manifest.json, or a preset: "
                          + ", ".join(sorted(PRESETS)))
    src.add_argument("--matrix", metavar="FILE", help="TOML/JSON experiment matrix")
    p.add_argument("--strategy", help="froshe, greedy or utility")
    p.add_argument("--robots", type=int, metavar="N")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed of the first run")
    p.add_argument("--repeat", type=int, metavar="N", help="runs with seeds seed..seed+N-1")
    p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--workers", type=int, default=1, metavar="N", help="parallel runs")
    p.add_argument("--debug-traces", action="store_true",
                   help="also write decision, swarm and monitor trace CSVs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if bool(args.scenario) == bool(args.matrix):
        parser.print_usage(sys.stderr)
        print("shepherd-explore: error: give exactly one of --scenario or --matrix",
              file=sys.stderr)
        return 2
    if args.seed is not None and args.seed < 0:
        print("shepherd-explore: error: --seed must be non-negative", file=sys.stderr)
        return 2
    out = Path(args.out or os.environ.get(OUT_ENV) or "results")
    try:
        groups, matrix = load_plan(args)
        _prepare_out(out)
        results = _run_all(groups, max(1, args.workers))
        summary = write_outputs(out, groups, results, matrix)
    except UsageError as exc:
        print(f"shepherd-explore: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, GenerationError, ValueError, KeyError, TypeError) as exc:
        print(f"shepherd-explore: error: {exc}", file=sys.stderr)
        return 1
    for cell in summary["cells"]:
        print(f"{cell['cell']}: n={cell['n']} dnf={cell['dnf']} median={cell['median']:.1f}s "
              f"iqr={cell['iqr']:.1f}s")
    print(f"wrote {len(summary['runs'])} run(s) to {out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
