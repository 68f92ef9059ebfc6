"""Static figures for projected curves and monitor drift (Agg backend, file output only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (4.5, 4.0),
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 0.8,
    "savefig.dpi": 150,
    "svg.hashsalt": "liegeo",
}


def _tex(label: str) -> str:
    # "x_23" -> "$x_{23}$"
    head, _, tail = label.partition("_")
    return f"${head}_{{{tail.replace('_', ',')}}}$" if tail else label


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps repeated runs byte-stable
    meta = {"Date": None} if path.suffix == ".svg" else {"Software": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    return path


def plot_projection(points, labels, path, title: str = "", mark_start: bool = True) -> Path:
    """Line plot of an (m, 3) curve in 3D; format taken from the file suffix."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"need an (m, 3) array, got {pts.shape}")
    with plt.rc_context(STYLE):
        fig = plt.figure()
        ax = fig.add_subplot(projection="3d")
        ax.plot(pts[:, 0], pts[:, 1], pts[:, 2], color="k")
        if mark_start:
            ax.scatter(*pts[0], color="tab:red", s=12, depthshade=False)
        ax.set_xlabel(_tex(labels[0]))
        ax.set_ylabel(_tex(labels[1]))
        ax.set_zlabel(_tex(labels[2]))
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_drift(times, monitors: dict, path, title: str = "") -> Path:
    """``|m(t) - m(0)|`` for each monitor on a log scale."""
    times = np.asarray(times, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        for name, series in monitors.items():
            s = np.asarray(series, dtype=float)
            dev = np.abs(s - s[0])
            dev[0] = np.nan
            ax.semilogy(times, np.maximum(dev, 1e-18), label=name)
        ax.set_xlabel("$t$")
        ax.set_ylabel("drift")
        if len(monitors) <= 12:
            ax.legend(fontsize=6, ncol=2, frameon=False)
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, Path(path))
