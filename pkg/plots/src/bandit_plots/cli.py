"""Command-line entry point: render both figures and print their summaries."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot_batches, plot_regret
from .io import SchemaError

__all__ = ["main", "parse_cli"]


def parse_cli(argv) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="plot",
        description=(
            "Render regret curves and batch-count bars from benchmark CSV "
            "artifacts."
        ),
    )
    parser.add_argument("regret_csv", help="aggregated regret table (regret.csv)")
    parser.add_argument("batches_csv", help="per-trial batch counts (batches.csv)")
    parser.add_argument("--out", required=True, help="output directory for the images")
    parser.add_argument("--title", default=None, help="figure title (default: instance label)")
    parser.add_argument(
        "--order",
        default=None,
        help="comma-separated algorithm display order (unlisted follow in file order)",
    )
    parser.add_argument(
        "--log-t", action="store_true", help="log-scale time axis on the regret figure"
    )
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        ns = parse_cli(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return int(exc.code or 0)
    order = tuple(s.strip() for s in ns.order.split(",")) if ns.order else ()
    try:
        spec = FigureSpec(
            regret_csv=ns.regret_csv,
            batches_csv=ns.batches_csv,
            output_dir=ns.out,
            title=ns.title,
            display_order=order,
            log_time_axis=ns.log_t,
        )
        regret_paths, regret_stats = plot_regret(spec)
        batch_paths, batch_stats = plot_batches(spec)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in (*regret_paths, *batch_paths):
        print(path)
    for algo, (mean, stderr) in regret_stats.items():
        print(f"final regret {algo}: mean={mean!r} stderr={stderr!r}")
    for algo, (mean, stderr) in batch_stats.items():
        print(f"batches {algo}: mean={mean!r} stderr={stderr!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
