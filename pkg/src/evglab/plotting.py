"""Deterministic figure rendering for the report path.

Figures are rendered with the Agg backend straight to SVG next to the
delimited output.  Byte-stable output matters (the suite is compared
run-to-run), so the SVG hash salt is pinned and no date metadata is
embedded.
"""

from __future__ import annotations

import threading

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_series"]

# pyplot state is global; concurrent experiment workers hand their
# figures through this lock (report assembly is serialized by design)
_RENDER_LOCK = threading.Lock()

_RC = {
    "svg.hashsalt": "evglab",
    "figure.figsize": (8.0, 4.5),
    "figure.dpi": 100,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.35,
    "lines.linewidth": 1.4,
}


def render_series(path: str, x, series: dict, title: str = "",
                  xlabel: str = "", ylabel: str = "", logx: bool = False,
                  logy: bool = False, hlines: dict | None = None) -> None:
    """Line chart of one or more named series against a shared x axis.

    `series` maps labels to y arrays (or to (x_i, y_i) pairs when the
    abscissas differ); `hlines` draws labeled horizontal reference
    levels (asymptotes, bounds).
    """
    with _RENDER_LOCK, plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, ys in sorted(series.items()):
            if isinstance(ys, tuple):
                ax.plot(ys[0], ys[1], label=label)
            else:
                ax.plot(x, ys, label=label)
        for label, level in sorted((hlines or {}).items()):
            ax.axhline(level, linestyle="--", linewidth=1.0, color="0.3")
            ax.annotate(label, xy=(0.99, level), xycoords=("axes fraction",
                                                           "data"),
                        ha="right", va="bottom", fontsize=7)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if series:
            ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
