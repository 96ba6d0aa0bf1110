"""Digitized measurement ingestion.

Raw curves from plot digitization carry (v, i) pairs in path order but no
time base and no gap column.  This module denoises them and rebuilds an
IVTrace with synthetic timestamps so the metric extractors can treat
measured and simulated sweeps identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousSweep, InvalidParams, WindowTooLarge
from .metrics import split_branches
from .model import IVTrace, SweepSpec
from .traceio import read_raw_curve

__all__ = ["RawCurve", "rolling_average", "to_trace", "load_raw_curve"]

# Smoothing is defined for any pair of samples; the 8-sample floor for a
# usable sweep is enforced when the curve becomes an IVTrace.
MIN_POINTS = 2


@dataclass(frozen=True)
class RawCurve:
    """Digitized (v, i) samples in the order the curve was traced."""

    v: np.ndarray
    i: np.ndarray
    source: str = "unknown"

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        i = np.asarray(self.i, dtype=float)
        if v.ndim != 1 or v.shape != i.shape:
            raise InvalidParams("v and i must be 1-d arrays of equal length")
        if len(v) < MIN_POINTS:
            raise InvalidParams(
                f"raw curve needs at least {MIN_POINTS} points, got {len(v)}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(i))):
            raise InvalidParams("raw curve samples must be finite")
        v.setflags(write=False)
        i.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "i", i)

    def __len__(self):
        return len(self.v)


def load_raw_curve(path, source=None):
    v, i = read_raw_curve(path)
    return RawCurve(v=v, i=i, source=source or str(path))


def rolling_average(points: RawCurve, window: int) -> RawCurve:
    """Centered moving average of the current channel.

    The window must be odd so the average stays centered; near the ends it
    shrinks to whatever neighbours exist within half a window.  Voltages are
    returned untouched.
    """
    n = len(points)
    if window < 1 or window % 2 == 0:
        raise WindowTooLarge(f"window must be odd and >= 1, got {window}")
    if window > n:
        raise WindowTooLarge(f"window {window} exceeds point count {n}")
    if window == 1:
        return points
    half = window // 2
    smoothed = np.empty(n)
    for k in range(n):
        lo = max(0, k - half)
        hi = min(n, k + half + 1)
        smoothed[k] = points.i[lo:hi].mean()
    return RawCurve(v=points.v, i=smoothed, source=points.source)


def _polarity_order(v):
    k_max = int(np.argmax(v))
    k_min = int(np.argmin(v))
    if not (v[k_max] > 0 and v[k_min] < 0):
        raise AmbiguousSweep(
            "curve stays in one polarity; a full bipolar sweep is required")
    return "positive-first" if k_max < k_min else "negative-first"


def to_trace(points: RawCurve, sweep: SweepSpec | None = None,
             order: str | None = None) -> IVTrace:
    """Rebuild an IVTrace from a digitized curve.

    Point order is taken as sweep order.  `order` (or the declared sweep's
    polarity_order) is checked against the apex order actually found; a
    mismatch means the file is not in the order the caller believes, which
    is unrecoverable without re-digitizing, so we refuse rather than guess.
    Timestamps are synthesized uniformly over the declared sweep duration
    (unit spacing when no sweep is given).
    """
    v = points.v
    found = _polarity_order(v)
    declared = order or (sweep.polarity_order if sweep is not None else None)
    if declared is not None and declared != found:
        raise AmbiguousSweep(
            f"declared {declared} but the curve traces {found}; "
            "pass the matching sweep order or reorder the input")
    n = len(points)
    if sweep is not None:
        t = np.linspace(0.0, sweep.duration, n)
        # Guard against zero spacing from absurd duration/point pairings.
        if not np.all(np.diff(t) > 0):
            t = np.arange(n, dtype=float)
    else:
        t = np.arange(n, dtype=float)
    trace = IVTrace(t=t, v=v, i=points.i, g=None, sweep=sweep)
    try:
        split_branches(trace)
    except Exception as exc:
        raise AmbiguousSweep(f"branch assignment failed: {exc}") from exc
    return trace
