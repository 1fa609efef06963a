"""Figure rendering: regret curves with error bands, batch-count bars.

Both figures are rendered deterministically: fixed geometry, a fixed
palette keyed by display position, a fixed SVG hash salt, and stripped
volatile metadata, so identical inputs produce byte-identical images under
the same tool versions.  Each figure is written once per format (PNG and
SVG), one figure per file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .io import (  # noqa: E402
    batches_summary,
    load_batches,
    load_regret,
    regret_summary,
)

__all__ = ["FigureSpec", "plot_regret", "plot_batches", "resolve_order"]

_FORMATS = ("png", "svg")
_DPI = 150
_HASH_SALT = "bandit-plots"

# Fixed palette keyed by display position (colorblind-safe).
_PALETTE = ("#0173b2", "#de8f05", "#029e73", "#d55e00", "#cc78bc", "#ca9161")


@dataclass(frozen=True)
class FigureSpec:
    """What to render: inputs, destination, and presentation choices.

    Attributes:
        regret_csv: path to the aggregated regret table.
        batches_csv: path to the per-trial batch-count table.
        output_dir: directory receiving the image files.
        title: figure title; defaults to the instance label found in the
            input files.
        display_order: algorithm names in the order lines/bars should
            appear; listed names must exist in the inputs, unlisted
            algorithms follow in file order.
        log_time_axis: render the time axis of the regret figure on a log
            scale instead of linear.

    Both input files are parsed at construction, so a spec only exists if
    its inputs satisfy the benchmark CSV schemas.
    """

    regret_csv: str
    batches_csv: str
    output_dir: str
    title: str | None = None
    display_order: tuple[str, ...] = field(default=())
    log_time_axis: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "display_order", tuple(self.display_order))
        load_regret(self.regret_csv)
        load_batches(self.batches_csv)


def resolve_order(
    available: tuple[str, ...], requested: tuple[str, ...]
) -> list[str]:
    """Display order: requested names first, the rest in file order."""
    for name in requested:
        if name not in available:
            raise ValueError(
                f"unknown algorithm {name!r} in display order; "
                f"inputs contain {list(available)}"
            )
    if len(set(requested)) != len(requested):
        raise ValueError(f"duplicate name in display order: {list(requested)}")
    return list(requested) + [a for a in available if a not in requested]


def _new_figure(title: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.5), dpi=_DPI)
    ax.set_title(title)
    return fig, ax


def _save_both(fig, stem: Path) -> list[Path]:
    """Write <stem>.png and <stem>.svg with volatile metadata stripped."""
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    with plt.rc_context({"svg.hashsalt": _HASH_SALT}):
        for fmt in _FORMATS:
            path = stem.with_suffix(f".{fmt}")
            metadata = (
                {"Software": _HASH_SALT}
                if fmt == "png"
                else {"Date": None, "Creator": _HASH_SALT}
            )
            fig.savefig(path, format=fmt, metadata=metadata)
            written.append(path)
    plt.close(fig)
    return written


def plot_regret(spec: FigureSpec) -> tuple[list[Path], dict[str, tuple[float, float]]]:
    """Render mean cumulative regret per algorithm with a ±1 stderr band.

    Returns the written image paths (PNG then SVG) and the final-checkpoint
    (mean, stderr) summary per algorithm, keyed and ordered for display.
    """
    table = load_regret(spec.regret_csv)
    order = resolve_order(table.algorithms, spec.display_order)
    title = spec.title if spec.title is not None else table.instance
    fig, ax = _new_figure(title)
    for pos, algo in enumerate(order):
        rows = table.series[algo]
        ts = [r[0] for r in rows]
        means = [r[1] for r in rows]
        los = [r[1] - r[2] for r in rows]
        his = [r[1] + r[2] for r in rows]
        color = _PALETTE[pos % len(_PALETTE)]
        ax.plot(ts, means, label=algo, color=color, linewidth=1.6)
        ax.fill_between(ts, los, his, color=color, alpha=0.25, linewidth=0)
    if spec.log_time_axis:
        ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("cumulative regret")
    ax.legend()
    written = _save_both(fig, Path(spec.output_dir) / "regret")
    summary = regret_summary(table)
    return written, {algo: summary[algo] for algo in order}


def plot_batches(spec: FigureSpec) -> tuple[list[Path], dict[str, tuple[float, float]]]:
    """Render mean batch count per algorithm as bars with stderr whiskers.

    Returns the written image paths (PNG then SVG) and the (mean, stderr)
    batch-count summary per algorithm, keyed and ordered for display.
    """
    table = load_batches(spec.batches_csv)
    order = resolve_order(table.algorithms, spec.display_order)
    title = spec.title if spec.title is not None else table.instance
    summary = batches_summary(table)
    fig, ax = _new_figure(title)
    xs = range(len(order))
    means = [summary[a][0] for a in order]
    errs = [summary[a][1] for a in order]
    colors = [_PALETTE[i % len(_PALETTE)] for i in xs]
    ax.bar(xs, means, yerr=errs, capsize=4, color=colors)
    ax.set_xticks(list(xs), order)
    ax.set_ylabel("mean batch count")
    written = _save_both(fig, Path(spec.output_dir) / "batches")
    return written, {algo: summary[algo] for algo in order}
