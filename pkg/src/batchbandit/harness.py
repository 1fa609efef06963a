"""CLI benchmark driver: instance grids, trial execution, CSV artifacts.

Runs algorithm x instance x seed grids and writes two CSV files per
experiment (RFC-4180, header row, UTF-8):

* ``regret.csv`` — ``algorithm,instance,t,mean_regret,stderr,trials``: the
  cumulative-regret trajectory aggregated over trials on the periodic
  checkpoint grid (every max(1, T // 1000) steps plus the horizon).
* ``batches.csv`` — ``algorithm,instance,trial,batch_count,wall_clock_ms``:
  one row per trial.

Per-trial regret traces go under ``raw/`` when requested.  Output is a
deterministic function of the configuration: trial i uses seed
``base_seed + i``, trials merge in trial order regardless of ``jobs``, and
wall-clock columns are written as 0.0 unless timing capture is switched on
(measured times would otherwise be the single nondeterministic byte source).
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithms import Schedule, run_e4, run_phaelimd, run_rs_oful
from .env import (
    Instance,
    load_instance,
    make_end_of_optimism,
    make_random_instance,
    save_instance,
)

__all__ = [
    "ExperimentConfig",
    "parse_instance_spec",
    "run_experiment",
    "sweep_epsilon",
    "parse_cli",
    "main",
    "ALGORITHMS",
    "DEFAULT_SWEEP_EPSILONS",
]

ALGORITHMS = ("e4", "phaelimd", "rsoful")

DEFAULT_SWEEP_EPSILONS = (0.005, 0.01, 0.05, 0.1, 0.15, 0.2)


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark run: instance, algorithms, horizon, trials, output.

    ``record_timing`` keeps measured wall-clock milliseconds in
    ``batches.csv``; it is off by default so that output bytes are a pure
    function of the configuration.
    """

    instance_spec: str
    algorithms: tuple[str, ...]
    horizon: int
    trials: int
    base_seed: int = 0
    schedule_kind: str = "t1"
    gamma: float = 0.9
    rsoful_c: float = 0.5
    output_dir: str = "results"
    jobs: int = 1
    raw: bool = False
    record_timing: bool = False
    eps_list: tuple[float, ...] = ()
    command: str = "run"

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "eps_list", tuple(self.eps_list))
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ValueError(
                    f"unknown algorithm {algo!r}; choose from {ALGORITHMS}"
                )
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 16:
            raise ValueError(f"horizon must be >= 16, got {self.horizon}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        parse_instance_spec(self.instance_spec)  # validates eagerly


def _parse_kv(body: str, spec: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in body.split(","):
        if "=" not in part:
            raise ValueError(f"malformed instance spec {spec!r}: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_instance_spec(spec: str) -> Instance:
    """Build an Instance from the spec mini-grammar.

    Grammar: ``endoa:d=<int>,eps=<float>`` | ``random:d=<int>,k=<int>,seed=<int>``
    | ``file:<path>``.
    """
    if ":" not in spec:
        raise ValueError(
            f"malformed instance spec {spec!r}: expected "
            "'endoa:d=..,eps=..', 'random:d=..,k=..,seed=..', or 'file:<path>'"
        )
    kind, body = spec.split(":", 1)
    try:
        if kind == "endoa":
            kv = _parse_kv(body, spec)
            if set(kv) != {"d", "eps"}:
                raise ValueError(f"endoa spec needs exactly d and eps, got {sorted(kv)}")
            return make_end_of_optimism(int(kv["d"]), float(kv["eps"]))
        if kind == "random":
            kv = _parse_kv(body, spec)
            if set(kv) != {"d", "k", "seed"}:
                raise ValueError(f"random spec needs exactly d, k and seed, got {sorted(kv)}")
            return make_random_instance(int(kv["d"]), int(kv["k"]), int(kv["seed"]))
        if kind == "file":
            return load_instance(body)
    except ValueError as exc:
        raise ValueError(f"invalid instance spec {spec!r}: {exc}") from exc
    raise ValueError(f"unknown instance spec kind {kind!r} in {spec!r}")


def _run_one(
    algo: str,
    spec: str,
    horizon: int,
    seed: int,
    schedule_kind: str,
    gamma: float,
    rsoful_c: float,
):
    """Run a single seeded trial; returns a slim, picklable summary."""
    inst = parse_instance_spec(spec)
    rng = np.random.default_rng(seed)
    if algo == "e4":
        result = run_e4(inst, horizon, Schedule(schedule_kind, gamma), None, rng)
    elif algo == "phaelimd":
        result = run_phaelimd(inst, horizon, rng)
    else:
        result = run_rs_oful(inst, horizon, rsoful_c, rng)
    return (
        algo,
        seed,
        list(result.regret_checkpoints),
        result.batch_count,
        result.wall_clock,
    )


def _trial_worker(args: tuple) -> tuple:
    return _run_one(*args)


def _checkpoint_grid(horizon: int) -> list[int]:
    step = max(1, horizon // 1000)
    grid = list(range(step, horizon + 1, step))
    if not grid or grid[-1] != horizon:
        grid.append(horizon)
    return grid


def _format(value: float) -> str:
    return repr(float(value))


def run_experiment(cfg: ExperimentConfig) -> list[str]:
    """Run the configured grid and write CSV artifacts.

    Returns the paths of the written files (regret.csv, batches.csv, then
    any raw traces).  Output bytes are fully determined by ``cfg``.
    """
    inst = parse_instance_spec(cfg.instance_spec)
    label = inst.label or cfg.instance_spec
    os.makedirs(cfg.output_dir, exist_ok=True)

    tasks = [
        (algo, cfg.instance_spec, cfg.horizon, cfg.base_seed + i,
         cfg.schedule_kind, cfg.gamma, cfg.rsoful_c)
        for algo in sorted(cfg.algorithms)
        for i in range(cfg.trials)
    ]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_trial_worker, tasks))
    else:
        results = [_run_one(*task) for task in tasks]

    grid = _checkpoint_grid(cfg.horizon)
    written: list[str] = []

    regret_path = os.path.join(cfg.output_dir, "regret.csv")
    with open(regret_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["algorithm", "instance", "t", "mean_regret", "stderr", "trials"])
        for algo in sorted(cfg.algorithms):
            rows = [r for r in results if r[0] == algo]
            trajectories = []
            for _, _, checkpoints, _, _ in rows:
                series = dict(checkpoints)
                trajectories.append([series[t] for t in grid])
            matrix = np.array(trajectories)  # trials x grid
            means = matrix.mean(axis=0)
            if matrix.shape[0] > 1:
                stderrs = matrix.std(axis=0, ddof=1) / math.sqrt(matrix.shape[0])
            else:
                stderrs = np.zeros(matrix.shape[1])
            for j, t in enumerate(grid):
                writer.writerow(
                    [algo, label, t, _format(means[j]), _format(stderrs[j]),
                     matrix.shape[0]]
                )
    written.append(regret_path)

    batches_path = os.path.join(cfg.output_dir, "batches.csv")
    with open(batches_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["algorithm", "instance", "trial", "batch_count", "wall_clock_ms"])
        for algo in sorted(cfg.algorithms):
            for _, seed, _, batch_count, wall_clock in (
                r for r in results if r[0] == algo
            ):
                trial_index = seed - cfg.base_seed
                ms = 1000.0 * wall_clock if cfg.record_timing else 0.0
                writer.writerow([algo, label, trial_index, batch_count, _format(ms)])
    written.append(batches_path)

    if cfg.raw:
        raw_dir = os.path.join(cfg.output_dir, "raw")
        os.makedirs(raw_dir, exist_ok=True)
        for algo, seed, checkpoints, _, _ in results:
            trial_index = seed - cfg.base_seed
            path = os.path.join(raw_dir, f"{algo}_trial{trial_index}.csv")
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(["t", "cum_regret"])
                for t, regret in checkpoints:
                    writer.writerow([t, _format(regret)])
            written.append(path)

    return written


def sweep_epsilon(cfg: ExperimentConfig, eps_list) -> list[str]:
    """Run the grid once per epsilon on the structured instance family.

    Requires an ``endoa:`` instance spec; each epsilon replaces the spec's
    eps and writes a full experiment under ``<output_dir>/eps_<value>/``.
    Returns the per-epsilon regret.csv paths.
    """
    if not cfg.instance_spec.startswith("endoa:"):
        raise ValueError("epsilon sweep requires an endoa: instance spec")
    base_inst = parse_instance_spec(cfg.instance_spec)
    d = base_inst.dim
    paths: list[str] = []
    for eps in eps_list:
        sub = replace(
            cfg,
            instance_spec=f"endoa:d={d},eps={eps:g}",
            output_dir=os.path.join(cfg.output_dir, f"eps_{eps:g}"),
        )
        written = run_experiment(sub)
        paths.append(written[0])
    return paths


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--algo",
        action="append",
        choices=ALGORITHMS,
        help="algorithm to run (repeatable; default: all three)",
    )
    parser.add_argument("--instance", required=True, help="instance spec (endoa:d=..,eps=.. | random:d=..,k=..,seed=.. | file:<path>)")
    parser.add_argument("--horizon", type=int, required=True, help="total pulls T per trial")
    parser.add_argument("--trials", type=int, default=10, help="seeded trials per algorithm")
    parser.add_argument("--seed", type=int, default=0, help="base seed; trial i uses seed base+i")
    parser.add_argument("--schedule", choices=["t1", "t2"], default="t1", help="elimination-rate schedule kind")
    parser.add_argument("--gamma", type=float, default=0.9, help="schedule exponent in (0,1)")
    parser.add_argument("--rsoful-c", type=float, default=0.5, help="determinant-growth switching parameter")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--raw", action="store_true", help="also write raw/ per-trial traces")
    parser.add_argument("--timing", action="store_true", help="record measured wall-clock in batches.csv (nondeterministic bytes)")


def parse_cli(argv) -> ExperimentConfig:
    """Parse CLI arguments into an ExperimentConfig."""
    parser = argparse.ArgumentParser(
        prog="bandit-bench",
        description="Benchmark batched linear-bandit algorithms and write CSV artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one algorithm x seed grid")
    _add_common_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="run the grid across structured-instance gap values")
    _add_common_flags(sweep_p)
    sweep_p.add_argument(
        "--eps",
        action="append",
        type=float,
        help=f"gap value (repeatable; default {list(DEFAULT_SWEEP_EPSILONS)})",
    )

    gen_p = sub.add_parser("gen-instance", help="write an instance file from a spec")
    gen_p.add_argument("--instance", required=True, help="instance spec to materialize")
    gen_p.add_argument("--out", required=True, help="output file path")

    ns = parser.parse_args(argv)
    if ns.command == "gen-instance":
        return ExperimentConfig(
            instance_spec=ns.instance,
            algorithms=(),
            horizon=16,
            trials=1,
            output_dir=ns.out,
            command="gen-instance",
        )
    algorithms = tuple(ns.algo) if ns.algo else ALGORITHMS
    eps_list = ()
    if ns.command == "sweep":
        eps_list = tuple(ns.eps) if ns.eps else DEFAULT_SWEEP_EPSILONS
    return ExperimentConfig(
        instance_spec=ns.instance,
        algorithms=algorithms,
        horizon=ns.horizon,
        trials=ns.trials,
        base_seed=ns.seed,
        schedule_kind=ns.schedule,
        gamma=ns.gamma,
        rsoful_c=getattr(ns, "rsoful_c"),
        output_dir=ns.out,
        jobs=ns.jobs,
        raw=ns.raw,
        record_timing=ns.timing,
        eps_list=eps_list,
        command=ns.command,
    )


def main(argv=None) -> int:
    """CLI entry point; returns a process exit code."""
    try:
        cfg = parse_cli(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    except ValueError as exc:  # eager config validation (bad spec, bounds)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.command == "gen-instance":
            inst = parse_instance_spec(cfg.instance_spec)
            save_instance(inst, cfg.output_dir)
            print(cfg.output_dir)
            return 0
        if cfg.command == "sweep":
            paths = sweep_epsilon(cfg, cfg.eps_list)
        else:
            paths = run_experiment(cfg)
        for path in paths:
            print(path)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
