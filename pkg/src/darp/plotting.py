"""Figures written next to CLI reports.

Uses the object-oriented matplotlib API with the Agg canvas so nothing
touches pyplot global state, and strips the PNG software tag so reruns
produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

FIGSIZE = (6.0, 3.7)
DPI = 100
_PNG_METADATA = {"Software": None}


def _new_figure(figsize: tuple[float, float] = FIGSIZE) -> tuple[Figure, Any]:
    fig = Figure(figsize=figsize, dpi=DPI)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    return fig, ax


def _save(fig: Figure, path: str | Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_PNG_METADATA)
    return Path(path)


def plot_dual_trace(trace: Sequence[float], path: str | Path) -> Path:
    """Dual objective after each coordinate update."""
    fig, ax = _new_figure()
    ax.plot(np.arange(len(trace)), trace, marker="o", ms=3, lw=1.2, color="tab:blue")
    ax.set_xlabel("update")
    ax.set_ylabel("dual objective")
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_class_totals(
    path: str | Path,
    target: Any,
    before: Any,
    after: Any | None = None,
    title: str = "",
) -> Path:
    """Grouped bars of per-class totals: target, input and (optionally) refined."""
    series = [("target", target, "0.3"), ("input", before, "tab:orange")]
    if after is not None:
        series.append(("refined", after, "tab:blue"))
    k = len(np.asarray(target))
    x = np.arange(k)
    width = 0.8 / len(series)
    fig, ax = _new_figure()
    for i, (label, values, color) in enumerate(series):
        ax.bar(x + (i - (len(series) - 1) / 2) * width, np.asarray(values), width, label=label, color=color)
    ax.set_xticks(x)
    ax.set_xticklabels([str(j) for j in x])
    ax.set_xlabel("class")
    ax.set_ylabel("total mass")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_class_distribution(path: str | Path, labeled: Any, unlabeled: Any) -> Path:
    """Per-class sample counts of the labeled and unlabeled profiles (log scale)."""
    k = len(np.asarray(labeled))
    x = np.arange(k)
    fig, ax = _new_figure()
    ax.bar(x - 0.2, np.asarray(labeled), 0.4, label="labeled", color="tab:green")
    ax.bar(x + 0.2, np.asarray(unlabeled), 0.4, label="unlabeled", color="tab:purple")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xlabel("class")
    ax.set_ylabel("samples")
    ax.legend(frameon=False)
    return _save(fig, path)
