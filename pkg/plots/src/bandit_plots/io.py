"""Loading and validating the benchmark CSV artifacts.

The benchmark harness writes two files: ``regret.csv`` with per-checkpoint
aggregated regret per algorithm and ``batches.csv`` with per-trial batch
counts.  This module parses both under their exact schemas and computes the
numeric summaries the figures are annotated with.  Any deviation from the
schema raises :class:`SchemaError`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "SchemaError",
    "RegretTable",
    "BatchTable",
    "load_regret",
    "load_batches",
    "regret_summary",
    "batches_summary",
]

REGRET_HEADER = ["algorithm", "instance", "t", "mean_regret", "stderr", "trials"]
BATCHES_HEADER = ["algorithm", "instance", "trial", "batch_count", "wall_clock_ms"]


class SchemaError(ValueError):
    """The input file does not follow the benchmark CSV contract."""


@dataclass(frozen=True)
class RegretTable:
    """Parsed regret.csv: per-algorithm aggregated regret trajectories.

    Attributes:
        path: source file.
        instance: instance label of the first data row.
        algorithms: algorithm names in first-appearance order.
        series: algorithm -> list of (t, mean_regret, stderr, trials) rows,
            in file order (ascending t).
    """

    path: str
    instance: str
    algorithms: tuple[str, ...]
    series: dict[str, list[tuple[int, float, float, int]]]


@dataclass(frozen=True)
class BatchTable:
    """Parsed batches.csv: per-trial batch counts per algorithm.

    Attributes:
        path: source file.
        instance: instance label of the first data row.
        algorithms: algorithm names in first-appearance order.
        counts: algorithm -> batch count per trial, in file order.
    """

    path: str
    instance: str
    algorithms: tuple[str, ...]
    counts: dict[str, list[int]]


def _read_rows(path: str | Path, expected_header: list[str]) -> list[list[str]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    if rows[0] != expected_header:
        raise SchemaError(
            f"{path}: header {rows[0]!r} does not match the benchmark "
            f"schema {expected_header!r}"
        )
    if len(rows) == 1:
        raise SchemaError(f"{path}: no data rows")
    width = len(expected_header)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise SchemaError(f"{path}: line {i}: expected {width} fields, got {len(row)}")
    return rows[1:]


def _parse_int(value: str, path: Path | str, line: int, column: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise SchemaError(f"{path}: line {line}: {column} must be an integer, got {value!r}") from exc


def _parse_float(value: str, path: Path | str, line: int, column: str) -> float:
    try:
        parsed = float(value)
    except ValueError as exc:
        raise SchemaError(f"{path}: line {line}: {column} must be a number, got {value!r}") from exc
    if not math.isfinite(parsed):
        raise SchemaError(f"{path}: line {line}: {column} must be finite, got {value!r}")
    return parsed


def load_regret(path: str | Path) -> RegretTable:
    """Parse regret.csv, enforcing the schema and per-column invariants."""
    rows = _read_rows(path, REGRET_HEADER)
    instance = rows[0][1]
    algorithms: list[str] = []
    series: dict[str, list[tuple[int, float, float, int]]] = {}
    for i, row in enumerate(rows, start=2):
        algo, _instance, t_s, mean_s, stderr_s, trials_s = row
        t = _parse_int(t_s, path, i, "t")
        mean = _parse_float(mean_s, path, i, "mean_regret")
        stderr = _parse_float(stderr_s, path, i, "stderr")
        trials = _parse_int(trials_s, path, i, "trials")
        if t < 1:
            raise SchemaError(f"{path}: line {i}: t must be >= 1, got {t}")
        if stderr < 0:
            raise SchemaError(f"{path}: line {i}: stderr must be >= 0, got {stderr}")
        if trials < 1:
            raise SchemaError(f"{path}: line {i}: trials must be >= 1, got {trials}")
        if algo not in series:
            algorithms.append(algo)
            series[algo] = []
        elif series[algo] and t <= series[algo][-1][0]:
            raise SchemaError(
                f"{path}: line {i}: t must be strictly increasing per "
                f"algorithm, got {t} after {series[algo][-1][0]}"
            )
        series[algo].append((t, mean, stderr, trials))
    return RegretTable(
        path=str(path),
        instance=instance,
        algorithms=tuple(algorithms),
        series=series,
    )


def load_batches(path: str | Path) -> BatchTable:
    """Parse batches.csv, enforcing the schema and per-column invariants."""
    rows = _read_rows(path, BATCHES_HEADER)
    instance = rows[0][1]
    algorithms: list[str] = []
    counts: dict[str, list[int]] = {}
    for i, row in enumerate(rows, start=2):
        algo, _instance, trial_s, count_s, ms_s = row
        _parse_int(trial_s, path, i, "trial")
        count = _parse_int(count_s, path, i, "batch_count")
        _parse_float(ms_s, path, i, "wall_clock_ms")
        if count < 1:
            raise SchemaError(f"{path}: line {i}: batch_count must be >= 1, got {count}")
        if algo not in counts:
            algorithms.append(algo)
            counts[algo] = []
        counts[algo].append(count)
    return BatchTable(
        path=str(path),
        instance=instance,
        algorithms=tuple(algorithms),
        counts=counts,
    )


def regret_summary(table: RegretTable) -> dict[str, tuple[float, float]]:
    """Final-checkpoint (mean, stderr) per algorithm, straight from the file."""
    return {
        algo: (rows[-1][1], rows[-1][2]) for algo, rows in table.series.items()
    }


def batches_summary(table: BatchTable) -> dict[str, tuple[float, float]]:
    """Per-algorithm (mean, stderr) of the per-trial batch counts.

    The standard error uses the sample standard deviation (ddof=1) divided
    by sqrt(trials); a single trial yields 0.0.
    """
    out: dict[str, tuple[float, float]] = {}
    for algo, values in table.counts.items():
        n = len(values)
        mean = sum(values) / n
        if n > 1:
            var = sum((v - mean) ** 2 for v in values) / (n - 1)
            stderr = math.sqrt(var) / math.sqrt(n)
        else:
            stderr = 0.0
        out[algo] = (mean, stderr)
    return out
