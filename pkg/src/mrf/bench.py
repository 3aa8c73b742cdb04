"""Benchmark runner: simulation grids to a flat CSV, plus the CLI entry point.

Each grid cell (space, n, d, method, replicate) draws its dataset seed
deterministically from the master seed, so reruns — serial or parallel —
produce identical rows apart from wall-clock timings.  Methods share the
replicate's dataset seed and therefore fit the same training data.

CSV schema (one row per fitted model):
space,method,n,d,rep,seed,fit_seconds,predict_seconds,mse,
solver_calls_fit,solver_calls_predict,status
"""

from __future__ import annotations

import argparse
import math
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .forest import SPLIT_RULES, ForestConfig, ForestModel, fit, predict
from .simgen import (
    GENERATORS,
    ScenarioConfig,
    dataset_path,
    make_scenario,
    write_dataset,
)

CSV_COLUMNS = [
    "space", "method", "n", "d", "rep", "seed",
    "fit_seconds", "predict_seconds", "mse",
    "solver_calls_fit", "solver_calls_predict", "status",
]


@dataclass
class ExperimentRecord:
    space: str
    method: str
    n: int
    d: int
    rep: int
    seed: int
    fit_seconds: float
    predict_seconds: float
    mse: float
    solver_calls_fit: int
    solver_calls_predict: int
    status: str

    def to_row(self) -> list[str]:
        return [
            self.space, self.method, str(self.n), str(self.d), str(self.rep),
            str(self.seed), repr(self.fit_seconds), repr(self.predict_seconds),
            repr(self.mse), str(self.solver_calls_fit),
            str(self.solver_calls_predict), self.status,
        ]


@dataclass
class GridConfig:
    spaces: list
    ns: list
    ds: list
    methods: list
    reps: int = 10
    trees: int = 100
    seed: int = 0
    min_leaf: int = 5
    alpha: float = 0.05
    subsample: float = 0.5
    mtry: int | None = None
    n_test: int = 100

    def __post_init__(self):
        for space in self.spaces:
            if space not in GENERATORS:
                raise ConfigError(f"unknown space {space!r}")
        for method in self.methods:
            if method not in SPLIT_RULES:
                raise ConfigError(f"unknown method {method!r}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")


def dataset_seed(master: int, space: str, n: int, d: int, rep: int) -> int:
    """Replicate seed: a pure function of the grid coordinates."""
    tag = zlib.crc32(space.encode("utf-8"))
    seq = np.random.SeedSequence([master, tag, n, d, rep])
    return int(seq.generate_state(1)[0])


def mse(model: ForestModel, X_test, true_means) -> float:
    """Mean squared distance between predictions and the noiseless means."""
    X_test = np.asarray(X_test, dtype=float)
    total = 0.0
    for x, target in zip(X_test, true_means):
        total += model.space.distance(predict(model, x), target) ** 2
    return total / X_test.shape[0]


def run_single(grid: GridConfig, space_name: str, n: int, d: int,
               method: str, rep: int) -> ExperimentRecord:
    """Generate one replicate, fit one model, measure one row."""
    seed = dataset_seed(grid.seed, space_name, n, d, rep)
    scenario = make_scenario(ScenarioConfig(space_name, n, d, grid.n_test, seed))
    config = ForestConfig(
        n_trees=grid.trees,
        subsample_fraction=grid.subsample,
        min_leaf=grid.min_leaf,
        balance_alpha=grid.alpha,
        mtry=grid.mtry,
        split_rule=method,
        seed=seed,
    )
    counter = scenario.space.solver_calls

    t0 = time.perf_counter()
    model = fit(scenario.X_train, scenario.y_train, scenario.space, config)
    fit_seconds = time.perf_counter() - t0
    calls_fit = counter.value

    t0 = time.perf_counter()
    preds = [predict(model, x) for x in scenario.X_test]
    predict_seconds = time.perf_counter() - t0
    calls_predict = counter.value - calls_fit

    space = scenario.space
    total = 0.0
    for guess, target in zip(preds, scenario.test_means):
        total += space.distance(guess, target) ** 2
    return ExperimentRecord(
        space=space_name, method=method, n=n, d=d, rep=rep, seed=seed,
        fit_seconds=fit_seconds, predict_seconds=predict_seconds,
        mse=total / max(1, len(preds)),
        solver_calls_fit=calls_fit, solver_calls_predict=calls_predict,
        status="ok",
    )


def _failed_record(grid, space, n, d, method, rep) -> ExperimentRecord:
    return ExperimentRecord(
        space=space, method=method, n=n, d=d, rep=rep,
        seed=dataset_seed(grid.seed, space, n, d, rep),
        fit_seconds=math.nan, predict_seconds=math.nan, mse=math.nan,
        solver_calls_fit=0, solver_calls_predict=0, status="failed",
    )


def _tasks(grid: GridConfig):
    for space in grid.spaces:
        for n in grid.ns:
            for d in grid.ds:
                for method in grid.methods:
                    for rep in range(grid.reps):
                        yield (space, n, d, method, rep)


class _Writer:
    """Appends one flushed line per record; header only on a fresh file."""

    def __init__(self, path):
        self.path = Path(path)
        fresh = not self.path.exists() or self.path.stat().st_size == 0
        self.handle = open(self.path, "a", encoding="utf-8")
        if fresh:
            self.handle.write(",".join(CSV_COLUMNS) + "\n")
            self.handle.flush()

    def write(self, record: ExperimentRecord) -> None:
        self.handle.write(",".join(record.to_row()) + "\n")
        self.handle.flush()

    def close(self) -> None:
        self.handle.close()


def run_grid(grid: GridConfig, out_path, jobs: int = 1,
             echo=None) -> list[ExperimentRecord]:
    """Run every grid cell, appending records to `out_path` as they finish."""
    tasks = list(_tasks(grid))
    writer = _Writer(out_path)
    records = []
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_single, grid, *task) for task in tasks]
                for task, future in zip(tasks, futures):
                    try:
                        record = future.result()
                    except Exception as err:
                        record = _failed_record(grid, *task)
                        if echo:
                            echo(f"{task}: FAILED: {err}")
                    records.append(record)
                    writer.write(record)
                    if echo and record.status == "ok":
                        echo(_progress_line(record))
        else:
            for task in tasks:
                try:
                    record = run_single(grid, *task)
                except Exception as err:
                    record = _failed_record(grid, *task)
                    if echo:
                        echo(f"{task}: FAILED: {err}")
                records.append(record)
                writer.write(record)
                if echo and record.status == "ok":
                    echo(_progress_line(record))
    finally:
        writer.close()
    return records


def _progress_line(r: ExperimentRecord) -> str:
    return (f"{r.space} {r.method} n={r.n} d={r.d} rep={r.rep}: "
            f"mse={r.mse:.5g} fit={r.fit_seconds:.2f}s "
            f"solver_calls={r.solver_calls_fit}")


# -- command line -------------------------------------------------------------

def _int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]

def _str_list(text: str) -> list:
    return [v.strip() for v in text.split(",") if v.strip()]

def _mtry(text: str):
    return None if text.strip().lower() == "all" else int(text)


_RUN_PARSERS = {
    "space": _str_list, "n": _int_list, "d": _int_list, "methods": _str_list,
    "reps": int, "trees": int, "seed": int, "out": str, "k": int,
    "alpha": float, "subsample": float, "mtry": _mtry, "n_test": int,
    "jobs": int,
}

_RUN_DEFAULTS = {
    "methods": ["medoid"], "reps": 10, "trees": 100, "seed": 0, "k": 5,
    "alpha": 0.05, "subsample": 0.5, "mtry": None, "n_test": 100, "jobs": 1,
}


def load_config_file(path) -> dict:
    """key=value lines mirroring the run flags; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as src:
        for lineno, line in enumerate(src, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _RUN_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _RUN_PARSERS[key](value)
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrf-bench",
        description="Benchmark metric-response forests on simulated data.",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulation grid and append a CSV")
    run_p.add_argument("--config", type=str,
                       help="key=value file providing defaults for the flags below")
    run_p.add_argument("--space", type=_str_list, help="comma-separated spaces")
    run_p.add_argument("--n", type=_int_list, help="comma-separated training sizes")
    run_p.add_argument("--d", type=_int_list, help="comma-separated dimensions")
    run_p.add_argument("--methods", type=_str_list,
                       help=f"comma-separated split rules {SPLIT_RULES}")
    run_p.add_argument("--reps", type=int, help="replicates per cell (default 10)")
    run_p.add_argument("--trees", type=int, help="trees per forest (default 100)")
    run_p.add_argument("--seed", type=int, help="master seed (default 0)")
    run_p.add_argument("--out", type=str, help="CSV output path (appended)")
    run_p.add_argument("--k", type=int, help="minimum leaf size (default 5)")
    run_p.add_argument("--alpha", type=float, help="balance fraction (default 0.05)")
    run_p.add_argument("--subsample", type=float,
                       help="subsample fraction (default 0.5)")
    run_p.add_argument("--mtry", type=_mtry,
                       help="features tried per split: a count or 'all'")
    run_p.add_argument("--n-test", type=int, dest="n_test",
                       help="test points per replicate (default 100)")
    run_p.add_argument("--jobs", type=int, help="parallel workers (default 1)")

    gen_p = sub.add_parser("datagen", help="write replicate datasets to files")
    gen_p.add_argument("--space", type=_str_list, required=True)
    gen_p.add_argument("--n", type=_int_list, required=True)
    gen_p.add_argument("--d", type=_int_list, required=True)
    gen_p.add_argument("--reps", type=int, default=10)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--n-test", type=int, dest="n_test", default=100)
    gen_p.add_argument("--out-dir", type=str, required=True)
    return parser


def _merged_run_options(args) -> dict:
    merged = dict(_RUN_DEFAULTS)
    if args.config:
        merged.update(load_config_file(args.config))
    for key in _RUN_PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    missing = [key for key in ("space", "n", "d", "out") if key not in merged]
    if missing:
        raise ConfigError(f"missing required options: {', '.join(missing)}")
    return merged


def _cmd_run(args) -> int:
    opts = _merged_run_options(args)
    grid = GridConfig(
        spaces=opts["space"], ns=opts["n"], ds=opts["d"],
        methods=opts["methods"], reps=opts["reps"], trees=opts["trees"],
        seed=opts["seed"], min_leaf=opts["k"], alpha=opts["alpha"],
        subsample=opts["subsample"], mtry=opts["mtry"], n_test=opts["n_test"],
    )
    records = run_grid(grid, opts["out"], jobs=opts["jobs"],
                       echo=lambda line: print(line, file=sys.stderr))
    failed = sum(1 for r in records if r.status != "ok")
    print(f"wrote {len(records)} rows to {opts['out']}"
          + (f" ({failed} failed)" if failed else ""))
    return 1 if failed else 0


def _cmd_datagen(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for space in args.space:
        for n in args.n:
            for d in args.d:
                for rep in range(args.reps):
                    seed = dataset_seed(args.seed, space, n, d, rep)
                    scenario = make_scenario(
                        ScenarioConfig(space, n, d, args.n_test, seed))
                    write_dataset(dataset_path(out_dir, space, n, d, rep), scenario)
                    count += 1
    print(f"wrote {count} replicate files to {out_dir}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_datagen(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
