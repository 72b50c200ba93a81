"""Reading and aggregating benchmark result files.

The benchmark harness writes one CSV row per evaluation event. Figures
need those rows grouped per run and aligned on the real-query axis:
solution accuracy is a step function between evaluations, so each run is
forward-filled onto the integer query grid before averaging. Trajectory
files are plain column tables from the pendulum episode exporter.
"""

import csv
from dataclasses import dataclass

import numpy as np

RESULTS_COLUMNS = (
    "run_id",
    "suite",
    "optimizer",
    "dim",
    "function_seed",
    "run_seed",
    "real_queries",
    "sim_queries",
    "update_index",
    "incumbent_value",
    "solution_accuracy",
    "committed_confidence",
)

TRAJECTORY_COLUMNS = ("x_tip", "y_tip", "x_d", "y_d")


class SchemaError(ValueError):
    """An input file does not have the columns the figure kind expects."""


@dataclass(frozen=True)
class ResultRow:
    """One evaluation event from a harness results file."""

    run_id: str
    suite: str
    optimizer: str
    dim: int
    function_seed: int
    run_seed: int
    real_queries: int
    sim_queries: int
    update_index: int
    incumbent_value: float
    solution_accuracy: float
    committed_confidence: float


@dataclass(frozen=True)
class CurveBand:
    """Mean and standard-deviation band of accuracy over the query grid."""

    queries: np.ndarray
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class QueryCounts:
    """Mean per-update real and sim query counts, aligned by update number."""

    updates: np.ndarray
    real_mean: np.ndarray
    sim_mean: np.ndarray


def _check_columns(header, required, path, exact):
    missing = [name for name in required if name not in header]
    unexpected = [name for name in header if name not in required] if exact else []
    if missing or unexpected:
        parts = []
        if missing:
            parts.append(f"missing columns {missing}")
        if unexpected:
            parts.append(f"unexpected columns {unexpected}")
        raise SchemaError(f"{path}: {', '.join(parts)} (expected {list(required)})")


def load_results(path) -> list[ResultRow]:
    """Parse a harness results CSV, insisting on the exact schema."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file (expected {list(RESULTS_COLUMNS)})")
        _check_columns(header, RESULTS_COLUMNS, path, exact=True)
        rows = []
        for record in reader:
            if len(record) != len(RESULTS_COLUMNS):
                raise SchemaError(
                    f"{path}: row {len(rows) + 2} has {len(record)} fields, expected "
                    f"{len(RESULTS_COLUMNS)}"
                )
            values = dict(zip(RESULTS_COLUMNS, record))
            rows.append(
                ResultRow(
                    run_id=values["run_id"],
                    suite=values["suite"],
                    optimizer=values["optimizer"],
                    dim=int(values["dim"]),
                    function_seed=int(values["function_seed"]),
                    run_seed=int(values["run_seed"]),
                    real_queries=int(values["real_queries"]),
                    sim_queries=int(values["sim_queries"]),
                    update_index=int(values["update_index"]),
                    incumbent_value=float(values["incumbent_value"]),
                    solution_accuracy=float(values["solution_accuracy"]),
                    committed_confidence=float(values["committed_confidence"]),
                )
            )
    return rows


def load_trajectory(path) -> dict[str, np.ndarray]:
    """Parse a pendulum trajectory CSV into named columns.

    The tip and reference coordinates are required; any further columns
    from the episode exporter are carried along untouched.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file (expected {list(TRAJECTORY_COLUMNS)})")
        _check_columns(header, TRAJECTORY_COLUMNS, path, exact=False)
        table = {name: [] for name in header}
        for record in reader:
            for name, value in zip(header, record):
                table[name].append(float(value))
    return {name: np.asarray(column) for name, column in table.items()}


def _step_fill(events, grid) -> np.ndarray:
    """Forward-fill (query count, accuracy) events onto an integer grid."""
    values = np.empty(grid.size)
    level = events[0][1]
    i = 0
    for j, q in enumerate(grid):
        while i < len(events) and events[i][0] <= q:
            level = events[i][1]
            i += 1
        values[j] = level
    return values


def aggregate_learning_curves(rows) -> dict[tuple[str, int], CurveBand]:
    """Mean and std of solution accuracy per (optimizer, dim) group.

    Runs in a group are aligned on the grid 1..max(real_queries); a run
    that stops early holds its last accuracy for the remaining grid.
    """
    groups: dict[tuple[str, int], dict[str, list]] = {}
    for row in rows:
        runs = groups.setdefault((row.optimizer, row.dim), {})
        runs.setdefault(row.run_id, []).append((row.real_queries, row.solution_accuracy))
    curves = {}
    for key, runs in groups.items():
        horizon = max(q for events in runs.values() for q, _ in events)
        grid = np.arange(1, horizon + 1)
        filled = np.vstack([_step_fill(events, grid) for events in runs.values()])
        curves[key] = CurveBand(queries=grid, mean=filled.mean(axis=0), std=filled.std(axis=0))
    return curves


def aggregate_query_counts(rows) -> dict[str, QueryCounts]:
    """Mean real and sim queries spent per update, keyed by optimizer.

    The counters in the results file are cumulative, so the spend of one
    update is the difference between consecutive update totals; updates
    are averaged over the runs that reached them.
    """
    totals: dict[tuple[str, str], dict[int, tuple[int, int]]] = {}
    for row in rows:
        updates = totals.setdefault((row.optimizer, row.run_id), {})
        updates[row.update_index] = (row.real_queries, row.sim_queries)
    spent_by_optimizer: dict[str, list] = {}
    for (optimizer, _), updates in totals.items():
        real_prev = sim_prev = 0
        spent = []
        for index in sorted(updates):
            real_total, sim_total = updates[index]
            spent.append((index, real_total - real_prev, sim_total - sim_prev))
            real_prev, sim_prev = real_total, sim_total
        spent_by_optimizer.setdefault(optimizer, []).append(spent)
    out = {}
    for optimizer, runs in spent_by_optimizer.items():
        horizon = max(spent[-1][0] for spent in runs) + 1
        real = np.zeros(horizon)
        sim = np.zeros(horizon)
        count = np.zeros(horizon)
        for spent in runs:
            for index, real_spent, sim_spent in spent:
                real[index] += real_spent
                sim[index] += sim_spent
                count[index] += 1
        mask = count > 0
        scale = np.maximum(count, 1)
        out[optimizer] = QueryCounts(
            updates=np.arange(1, horizon + 1)[mask],
            real_mean=(real / scale)[mask],
            sim_mean=(sim / scale)[mask],
        )
    return out
