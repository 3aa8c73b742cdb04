"""Grouped boxplot figures: one box per method inside each (n, d) cell.

Figures are built on explicit `Figure` objects rather than pyplot, so
rendering is deterministic, headless, and leaves no global state behind.
"""

from matplotlib.figure import Figure
from matplotlib.patches import Patch

from .results import ResultsFrame

METHOD_COLORS = ("#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4")


class EmptySelectionError(ValueError):
    """No successful rows matched the requested filter."""


def _select(frame: ResultsFrame, space: str) -> list:
    rows = frame.ok_rows(space)
    if not rows:
        raise EmptySelectionError(
            f"no successful rows for space {space!r} in {frame.path}"
        )
    return rows


def _grouped_boxplot(ax, rows, value_of) -> None:
    """One box per method per (n, d) cell, methods side by side."""
    methods = sorted({r.method for r in rows})
    cells = sorted({(r.n, r.d) for r in rows})
    stride = len(methods) + 1
    for mi, method in enumerate(methods):
        data, positions = [], []
        for ci, cell in enumerate(cells):
            values = [
                value_of(r)
                for r in rows
                if r.method == method and (r.n, r.d) == cell
            ]
            if values:
                data.append(values)
                positions.append(ci * stride + mi + 1)
        if not data:
            continue
        color = METHOD_COLORS[mi % len(METHOD_COLORS)]
        parts = ax.boxplot(
            data,
            positions=positions,
            widths=0.8,
            patch_artist=True,
            medianprops={"color": "black"},
        )
        for box in parts["boxes"]:
            box.set_facecolor(color)
            box.set_alpha(0.7)
    centers = [ci * stride + 0.5 * (len(methods) + 1) for ci in range(len(cells))]
    ax.set_xticks(centers)
    ax.set_xticklabels([f"n={n}\nd={d}" for n, d in cells])
    ax.set_xlabel("experiment cell")
    handles = [
        Patch(facecolor=METHOD_COLORS[mi % len(METHOD_COLORS)], alpha=0.7,
              label=method)
        for mi, method in enumerate(methods)
    ]
    ax.legend(handles=handles, loc="best")


def mse_figure(frame: ResultsFrame, space: str) -> Figure:
    """Boxplots of test MSE by (n, d) cell for one space."""
    rows = _select(frame, space)
    fig = Figure(figsize=(8, 5))
    ax = fig.subplots()
    _grouped_boxplot(ax, rows, lambda r: r.mse)
    ax.set_ylabel("test MSE (squared metric distance)")
    ax.set_title(f"{space}: prediction error by cell and method")
    fig.tight_layout()
    return fig


def runtime_figure(frame: ResultsFrame, space: str) -> Figure:
    """Boxplots of fit time by (n, d) cell for one space, log-scale axis."""
    rows = _select(frame, space)
    fig = Figure(figsize=(8, 5))
    ax = fig.subplots()
    _grouped_boxplot(ax, rows, lambda r: r.fit_seconds)
    ax.set_yscale("log")
    ax.set_ylabel("fit time (seconds)")
    ax.set_title(f"{space}: training runtime by cell and method")
    fig.tight_layout()
    return fig
