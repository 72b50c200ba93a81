"""Matplotlib renderers for the three figure kinds.

Everything draws on the Agg backend so figures render identically in
batch jobs and terminals. Rendering is read-only over its inputs: files
are parsed, aggregated, and drawn, never rewritten.
"""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .data import (
    aggregate_learning_curves,
    aggregate_query_counts,
    load_results,
    load_trajectory,
)

KINDS = ("learning_curve", "query_tradeoff", "trajectory")


@dataclass(frozen=True)
class FigureRequest:
    """What to draw: a kind, its input files, and the output image path."""

    kind: str
    inputs: tuple
    out: str
    labels: tuple | None = None
    title: str | None = None
    dpi: int = 150

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(path) for path in self.inputs))
        object.__setattr__(self, "out", str(self.out))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        if self.dpi < 1:
            raise ValueError(f"dpi must be a positive integer, got {self.dpi}")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
            if len(self.labels) != len(self.inputs):
                raise ValueError(
                    f"got {len(self.labels)} labels for {len(self.inputs)} input files"
                )


def _load_all_results(request: FigureRequest):
    return [row for path in request.inputs for row in load_results(path)]


def _learning_curve_figure(request: FigureRequest):
    curves = aggregate_learning_curves(_load_all_results(request))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for optimizer, dim in sorted(curves):
        band = curves[(optimizer, dim)]
        (line,) = ax.plot(band.queries, band.mean, label=f"{optimizer} d={dim}")
        ax.fill_between(
            band.queries,
            band.mean - band.std,
            band.mean + band.std,
            color=line.get_color(),
            alpha=0.2,
            linewidth=0,
        )
    ax.set_xlabel("real queries")
    ax.set_ylabel("solution accuracy")
    ax.set_title(request.title or "learning curves")
    ax.legend()
    return fig


def _query_tradeoff_figure(request: FigureRequest):
    counts = aggregate_query_counts(_load_all_results(request))
    names = sorted(counts)
    fig, axes = plt.subplots(
        1, len(names), figsize=(4.0 * len(names), 3.6), sharey=True, squeeze=False
    )
    for ax, optimizer in zip(axes[0], names):
        tally = counts[optimizer]
        width = 0.4
        ax.bar(tally.updates - width / 2, tally.real_mean, width=width, label="real")
        ax.bar(tally.updates + width / 2, tally.sim_mean, width=width, label="sim")
        ax.set_xlabel("update")
        ax.set_title(optimizer)
        ax.legend()
    axes[0][0].set_ylabel("mean queries per update")
    fig.suptitle(request.title or "query trade-off")
    fig.tight_layout()
    return fig


def _trajectory_figure(request: FigureRequest):
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    for position, path in enumerate(request.inputs):
        table = load_trajectory(path)
        if position == 0:
            ax.plot(table["x_d"], table["y_d"], "k--", linewidth=1.2, label="reference")
        label = request.labels[position] if request.labels else Path(path).stem
        ax.plot(table["x_tip"], table["y_tip"], linewidth=1.0, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.set_title(request.title or "tip trajectory")
    ax.legend()
    return fig


_FIGURES = {
    "learning_curve": _learning_curve_figure,
    "query_tradeoff": _query_tradeoff_figure,
    "trajectory": _trajectory_figure,
}


def render(request: FigureRequest) -> str:
    """Draw the requested figure and write it to request.out."""
    fig = _FIGURES[request.kind](request)
    try:
        fig.savefig(request.out, dpi=request.dpi)
    finally:
        plt.close(fig)
    return request.out
