"""Figure rendering with a non-interactive backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from isoplots.figspec import FigureSpec, load_series


def build_figure(spec: FigureSpec):
    """Matplotlib figure for the spec; the plotted series are exactly the
    CSV columns, so rendering twice from the same inputs produces identical
    data series."""
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for s in spec.series:
        vols, areas = load_series(s)
        ax.plot(vols, areas, s.style, label=s.label or s.case or s.csv)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Write the figure described by the spec; returns the output path."""
    fig = build_figure(spec)
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return spec.output
