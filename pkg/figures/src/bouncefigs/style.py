"""Shared matplotlib defaults and the PNG+SVG save helper."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 11,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.0, 3.7),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.bbox": "tight",
    "savefig.dpi": 150,
}


def new_figure(nrows: int = 1, ncols: int = 1, **kwargs):
    with plt.rc_context(RC):
        fig, axes = plt.subplots(nrows, ncols, **kwargs)
    return fig, axes


def save(fig, out: str | Path) -> list[Path]:
    """Write the figure as both PNG and SVG next to `out`'s stem."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    written = []
    for suffix in (".png", ".svg"):
        target = stem.with_suffix(suffix)
        fig.savefig(target)
        written.append(target)
    plt.close(fig)
    return written
