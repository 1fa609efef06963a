"""Figure rendering for the batched linear-bandit benchmark CSV artifacts.

Reads the harness CSV contract only — ``regret.csv`` and ``batches.csv`` —
and renders the two benchmark figures: mean cumulative regret per algorithm
with ±1 standard-error bands, and mean batch counts as bars with
standard-error whiskers.  PNG and SVG, one figure per file, deterministic
output for identical inputs.
"""

from .figures import FigureSpec, plot_batches, plot_regret, resolve_order
from .io import (
    BatchTable,
    RegretTable,
    SchemaError,
    batches_summary,
    load_batches,
    load_regret,
    regret_summary,
)
from .cli import main

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "plot_regret",
    "plot_batches",
    "resolve_order",
    "SchemaError",
    "RegretTable",
    "BatchTable",
    "load_regret",
    "load_batches",
    "regret_summary",
    "batches_summary",
    "main",
    "__version__",
]
