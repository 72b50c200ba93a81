"""Figure generation for benchmark harness output files.

Three figure kinds cover the standard views of a benchmark batch:
learning curves (mean and std band of solution accuracy against real
queries), per-update sim/real query trade-off bars, and pendulum tip
trajectories overlaid on their reference path. The package only reads
the harness CSV artifacts; it never imports the optimization library.
"""

from .data import (
    RESULTS_COLUMNS,
    TRAJECTORY_COLUMNS,
    CurveBand,
    QueryCounts,
    ResultRow,
    SchemaError,
    aggregate_learning_curves,
    aggregate_query_counts,
    load_results,
    load_trajectory,
)
from .figures import KINDS, FigureRequest, render

__all__ = [
    "KINDS",
    "RESULTS_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "CurveBand",
    "FigureRequest",
    "QueryCounts",
    "ResultRow",
    "SchemaError",
    "aggregate_learning_curves",
    "aggregate_query_counts",
    "load_results",
    "load_trajectory",
    "render",
]
