"""SVG figure panels for one or more trajectory logs.

Figures are drawn on standalone ``Figure`` objects (no pyplot state), so
rendering is safe from worker threads and output bytes depend only on the
logs passed in.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .sim import TrajectoryLog

golden_mean = (math.sqrt(5.0) - 1.0) / 2.0
fig_width = 5.0
fig_size = [fig_width, fig_width * golden_mean]

colors = ["#08589e", "#d95f02", "#1b9e77", "#7570b3", "#e7298a", "#66a61e", "#a6761d"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.family": "sans-serif",
    "font.sans-serif": ["DejaVu Sans"],
    "font.size": 9,
    "mathtext.fontset": "dejavusans",
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": fig_size,
    "lines.linewidth": 1.2,
    "lines.markersize": 6,
    "figure.subplot.left": 0.14,
    "figure.subplot.bottom": 0.15,
    "figure.subplot.right": 0.86,
    "figure.subplot.top": 0.93,
    # fixed ids and no timestamp keep the SVG bytes reproducible
    "svg.hashsalt": "tpng-impact",
    "svg.fonttype": "path",
}

PANELS = ("trajectory", "time_to_go", "acceleration", "error_velocity")


def _label(log: TrajectoryLog, index: int) -> str:
    return str(log.meta.get("label", f"run {index + 1}"))


def _new():
    fig = Figure(figsize=fig_size)
    FigureCanvasSVG(fig)
    return fig, fig.add_subplot(1, 1, 1)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def _trajectory(logs, out):
    fig, ax = _new()
    for k, log in enumerate(logs):
        col = colors[k % len(colors)]
        xi, yi, xt, yt = (log[n] / 1e3 for n in ("x_i", "y_i", "x_t", "y_t"))
        ax.plot(xi, yi, color=col, label=_label(log, k))
        ax.plot(xt, yt, color=col, ls="--")
        ax.plot([xi[0], xt[0]], [yi[0], yt[0]], "o", mfc="none", color=col)
        if log.meta.get("intercepted", bool(log["r"][-1] <= 1.0)):
            ax.plot(xi[-1], yi[-1], "x", color=col, mew=1.5)
    ax.set_xlabel("x [km]")
    ax.set_ylabel("y [km]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best")
    return _save(fig, out / "trajectory.svg")


def _time_to_go(logs, out):
    fig, ax = _new()
    for k, log in enumerate(logs):
        ax.plot(log["t"], log["t_go"], label=_label(log, k))
    ax.set_xlabel("t [s]")
    ax.set_ylabel(r"$t_{go}$ [s]")
    ax.legend(loc="best")
    return _save(fig, out / "time_to_go.svg")


def _acceleration(logs, out):
    fig, ax = _new()
    bounds = set()
    for k, log in enumerate(logs):
        col = colors[k % len(colors)]
        a_cmd = np.clip(log["a_cmd"], -1e3, 1e3)
        ax.plot(log["t"], a_cmd, color=col, lw=0.6, alpha=0.5)
        ax.plot(log["t"], log["a_i"], color=col, label=_label(log, k))
        if "a_min" in log.meta:
            bounds.update((log.meta["a_min"], log.meta["a_max"]))
    for b in sorted(bounds):
        ax.axhline(b, color="k", ls=":", lw=0.8)
    if bounds:
        lo, hi = min(bounds), max(bounds)
        pad = 0.25 * (hi - lo)
        ax.set_ylim(lo - pad, hi + pad)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(r"$a_I$ (solid), $a_I^c$ (faint) [m/s$^2$]")
    ax.legend(loc="best")
    return _save(fig, out / "acceleration.svg")


def _error_velocity(logs, out):
    fig, ax = _new()
    ax2 = ax.twinx()
    ax2.grid(False)
    for k, log in enumerate(logs):
        col = colors[k % len(colors)]
        ax.plot(log["t"], log["e"], color=col, label=_label(log, k))
        ax2.plot(log["t"], log["v_i"], color=col, ls="--")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("e [s] (solid)")
    ax2.set_ylabel(r"$V_I$ [m/s] (dashed)")
    ax.legend(loc="best")
    return _save(fig, out / "error_velocity.svg")


def render_plots(logs: Sequence[TrajectoryLog] | TrajectoryLog, out_dir) -> list[Path]:
    """Write the four panels (trajectory, t_go, acceleration, error/velocity).

    Several logs are overlaid with one color per run. ``out_dir`` is created
    if missing. Returns the written paths in :data:`PANELS` order.
    """
    if isinstance(logs, TrajectoryLog):
        logs = [logs]
    logs = list(logs)
    if not logs or any(len(log) == 0 for log in logs):
        raise ValueError("render_plots needs at least one nonempty log")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(params):
        return [_trajectory(logs, out), _time_to_go(logs, out),
                _acceleration(logs, out), _error_velocity(logs, out)]
