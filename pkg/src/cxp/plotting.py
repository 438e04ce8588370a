"""Figures written next to the CSV reports (needs the ``plot`` extra).

matplotlib is imported lazily and forced onto the Agg backend, so the rest
of the package works without it.
"""

from __future__ import annotations

import math
from pathlib import Path


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({
        "font.size": 10,
        "axes.labelsize": 10,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "savefig.dpi": 150,
    })
    return plt


def new_figure(width=6.0, height=None):
    plt = _pyplot()
    if height is None:
        height = width * (math.sqrt(5) - 1.0) / 2.0
    fig, ax = plt.subplots(figsize=(width, height))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    _pyplot().close(fig)
    return path


def plot_coverage_curves(curves: dict, path) -> Path:
    """Cumulative covered addresses versus number of IXPs.

    ``curves`` maps a legend label to a ``[(ixp_id, cumulative), ...]`` list.
    """
    fig, ax = new_figure()
    for label, curve in curves.items():
        xs = list(range(1, len(curve) + 1))
        ys = [total / 1e9 for _, total in curve]
        ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel("Number of IXPs")
    ax.set_ylabel("Covered IPv4 addresses (billions)")
    ax.set_ylim(bottom=0)
    ax.grid(True, alpha=0.3)
    if len(curves) > 1:
        ax.legend(frameon=False)
    return _save(fig, path)


def plot_diversity_matrix(ixps: list, matrix: list, path) -> Path:
    import numpy as np

    fig, ax = new_figure(width=1.2 * len(ixps) + 2, height=1.0 * len(ixps) + 1.5)
    values = np.array([[np.nan if v is None else v for v in row] for row in matrix], dtype=float)
    im = ax.imshow(values, cmap="viridis")
    ax.set_xticks(range(len(ixps)), labels=ixps, rotation=45, ha="right")
    ax.set_yticks(range(len(ixps)), labels=ixps)
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            ax.text(j, i, "-" if v is None else str(v), ha="center", va="center",
                    color="white" if v is not None else "black", fontsize=8)
    fig.colorbar(im, ax=ax, label="edge-disjoint paths")
    return _save(fig, path)


def plot_availability(metrics, path) -> Path:
    availability = metrics.availability
    rids = sorted(availability)
    fig, ax = new_figure()
    ax.bar(range(len(rids)), [availability[r] for r in rids], color="tab:blue")
    ax.set_xticks(range(len(rids)), labels=rids, rotation=45, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Availability")
    return _save(fig, path)
