"""Figure rendering for traces and fit reports.

Renders to files only (Agg); interactive display is out of scope.  The
style is deliberately locked so regenerated figures diff cleanly against
committed ones.
"""

from __future__ import annotations

import os

import matplotlib

if not os.environ.get("MPLBACKEND"):
    matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_trace_figure", "save_fit_figure", "STYLE"]

STYLE = {
    "figure.figsize": (9.0, 3.6),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.axisbelow": True,
    "font.size": 9,
    "lines.linewidth": 1.4,
    "legend.fontsize": 8,
    "legend.framealpha": 0.8,
}

LOG_FLOOR_A = 1e-12


def _panels(title):
    fig, (ax_lin, ax_log) = plt.subplots(1, 2)
    ax_lin.set_xlabel("V (V)")
    ax_lin.set_ylabel("I (A)")
    ax_log.set_xlabel("V (V)")
    ax_log.set_ylabel("|I| (A)")
    ax_log.set_yscale("log")
    if title:
        fig.suptitle(title)
    return fig, ax_lin, ax_log


def _draw(ax_lin, ax_log, trace, label, color=None, **kw):
    absi = np.maximum(np.abs(trace.i), LOG_FLOOR_A)
    line, = ax_lin.plot(trace.v, trace.i, label=label, color=color, **kw)
    ax_log.plot(trace.v, absi, color=line.get_color(), **kw)
    return line


def _mark_events(ax_lin, ax_log, metrics):
    for ax in (ax_lin, ax_log):
        ax.axvline(metrics.v_set, color="tab:green", ls="--", lw=0.9)
        ax.axvline(metrics.v_reset, color="tab:red", ls="--", lw=0.9)
    ax_lin.axvline(np.nan, color="tab:green", ls="--", lw=0.9,
                   label=f"v_set={metrics.v_set:.3g} V")
    ax_lin.axvline(np.nan, color="tab:red", ls="--", lw=0.9,
                   label=f"v_reset={metrics.v_reset:.3g} V")


def save_trace_figure(trace, path, metrics=None, title=None):
    """One sweep as linear and log-current panels, event markers optional."""
    with plt.rc_context(STYLE):
        fig, ax_lin, ax_log = _panels(title)
        _draw(ax_lin, ax_log, trace, "sweep")
        if metrics is not None:
            _mark_events(ax_lin, ax_log, metrics)
        ax_lin.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def save_fit_figure(ref_trace, stage_traces, path, metrics=None, title=None):
    """Reference sweep against one or more fitted sweeps.

    `stage_traces` maps labels to traces and is drawn in insertion order,
    so pass the final stage last to draw it on top.
    """
    with plt.rc_context(STYLE):
        fig, ax_lin, ax_log = _panels(title)
        if ref_trace is not None:
            _draw(ax_lin, ax_log, ref_trace, "reference", color="black",
                  lw=2.0, alpha=0.6)
        n = max(len(stage_traces), 1)
        for j, (label, trace) in enumerate(stage_traces.items()):
            color = plt.get_cmap("viridis")(0.15 + 0.7 * j / max(n - 1, 1))
            _draw(ax_lin, ax_log, trace, label, color=color)
        if metrics is not None:
            _mark_events(ax_lin, ax_log, metrics)
        ax_lin.legend(loc="best")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
