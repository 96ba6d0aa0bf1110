"""Switching metrics extracted from bipolar I-V traces.

A triangular sweep is split into four branches (positive/negative x
forward/return), each resampled onto a uniform voltage grid.  From those
branches we extract:

* v_set: voltage of the steepest rise of log10|i| on the positive forward
  branch (filament formation);
* v_reset: voltage where |i| peaks on the negative forward branch and starts
  to decay as the filament dissolves;
* lrs_slope: least-squares dI/dV in a window just below v_set on the positive
  return branch, falling back to a window just above v_reset when the set
  window is mostly compliance-clamped;
* area_lrs / area_hrs: absolute loop areas enclosed by forward and return
  branches over the positive and negative halves.

All extraction is deterministic and total: any trace either yields a metric
or raises a typed error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateWindow, InvalidParams, MalformedSweep,
                     NoResetEvent, NoSetEvent)

GRID_POINTS = 512
CURRENT_FLOOR_A = 1e-12

# Slope window: fraction of the event voltage magnitude, adjacent to it.
SLOPE_WINDOW_FRACTION = 0.15
MIN_WINDOW_SAMPLES = 4
CLAMP_FRACTION_FOR_FALLBACK = 0.5

# Set detection: the log-current jump must beat both an absolute slope and a
# multiple of the steepest smooth-conduction slope seen on the return branch.
SET_MIN_SLOPE_DECADES_PER_V = 2.0
SET_BASELINE_FACTOR = 1.5
SET_DETECT_MASK_FRACTION = 0.10   # skip the near-zero 1/V log-slope artifact
BASELINE_MASK_FRACTION = 0.25

# Reset detection: beyond the current peak the current must decay.
RESET_DECLINE_FRACTION = 0.30
PLATEAU_REL_TOL = 1e-9

# Hysteresis pruning.
AREA_FLOOR_COEFF = 1e-4
MIN_EVENT_GAP_SAMPLES = 5


@dataclass(frozen=True)
class Branch:
    """One sweep branch resampled on an ascending uniform voltage grid."""

    v: np.ndarray
    i: np.ndarray


@dataclass(frozen=True)
class BranchSplit:
    """The four branches plus the raw-index range of each segment."""

    pos_forward: Branch
    pos_return: Branch
    neg_forward: Branch
    neg_return: Branch
    segments: dict   # branch name -> (start, stop) indices into the raw trace


@dataclass(frozen=True)
class NvmMetrics:
    """The five scalar switching metrics of one bipolar sweep."""

    v_set: float
    v_reset: float
    lrs_slope: float
    area_lrs: float
    area_hrs: float
    slope_region: str = "set-region"

    def __post_init__(self):
        vals = (self.v_set, self.v_reset, self.lrs_slope,
                self.area_lrs, self.area_hrs)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParams("metrics must be finite")
        if not self.v_set > 0:
            raise InvalidParams("v_set must be positive")
        if not self.v_reset < 0:
            raise InvalidParams("v_reset must be negative")
        if not self.lrs_slope > 0:
            raise InvalidParams("lrs_slope must be positive")
        if not (self.area_lrs >= self.area_hrs >= 0):
            raise InvalidParams("need area_lrs >= area_hrs >= 0")
        if self.slope_region not in ("set-region", "reset-region"):
            raise InvalidParams(f"bad slope_region {self.slope_region!r}")

    def to_dict(self):
        return {"v_set": self.v_set, "v_reset": self.v_reset,
                "lrs_slope": self.lrs_slope, "area_lrs": self.area_lrs,
                "area_hrs": self.area_hrs, "slope_region": self.slope_region}

    @classmethod
    def from_dict(cls, d):
        return cls(v_set=float(d["v_set"]), v_reset=float(d["v_reset"]),
                   lrs_slope=float(d["lrs_slope"]),
                   area_lrs=float(d["area_lrs"]),
                   area_hrs=float(d["area_hrs"]),
                   slope_region=str(d.get("slope_region", "set-region")))


def _resample(v_seg, i_seg, grid):
    order = np.argsort(v_seg, kind="stable")
    return np.interp(grid, v_seg[order], i_seg[order])


def split_branches(trace):
    """Split a trace into four voltage-gridded branches.

    Branches are assigned by polarity and sweep direction: the segment
    between the start and the positive apex is positive-forward, apex back to
    the zero crossing positive-return, and symmetrically for the negative
    half.  Works for either polarity order.
    """
    v = np.asarray(trace.v, dtype=float)
    i = np.asarray(trace.i, dtype=float)
    n = len(v)
    k_max = int(np.argmax(v))
    k_min = int(np.argmin(v))
    if not (v[k_max] > 0 and v[k_min] < 0):
        raise MalformedSweep("sweep must cross both polarities")

    first, second = (k_max, k_min) if k_max < k_min else (k_min, k_max)
    # Zero crossing between the two apexes separates the halves.
    between = np.nonzero(v[first:second + 1] * v[first] <= 0)[0]
    if len(between) == 0:
        raise MalformedSweep("no zero crossing between apexes")
    k_cross = first + int(between[0])

    if k_max < k_min:
        seg = {"pos_forward": (0, k_max + 1),
               "pos_return": (k_max, k_cross + 1),
               "neg_forward": (k_cross, k_min + 1),
               "neg_return": (k_min, n)}
    else:
        seg = {"neg_forward": (0, k_min + 1),
               "neg_return": (k_min, k_cross + 1),
               "pos_forward": (k_cross, k_max + 1),
               "pos_return": (k_max, n)}
    for name, (a, b) in seg.items():
        if b - a < 2:
            raise MalformedSweep(f"{name} segment has fewer than 2 samples")

    def half_grid(fwd_name, ret_name, positive):
        fa, fb = seg[fwd_name]
        ra, rb = seg[ret_name]
        vf, vr = v[fa:fb], v[ra:rb]
        lo = max(vf.min(), vr.min())
        hi = min(vf.max(), vr.max())
        lo = max(lo, 0.0) if positive else lo
        hi = hi if positive else min(hi, 0.0)
        if not hi > lo:
            raise MalformedSweep(f"{fwd_name}/{ret_name} have no overlap")
        grid = np.linspace(lo, hi, GRID_POINTS)
        return (Branch(grid, _resample(vf, i[fa:fb], grid)),
                Branch(grid, _resample(vr, i[ra:rb], grid)))

    pos_fwd, pos_ret = half_grid("pos_forward", "pos_return", True)
    neg_fwd, neg_ret = half_grid("neg_forward", "neg_return", False)
    return BranchSplit(pos_forward=pos_fwd, pos_return=pos_ret,
                       neg_forward=neg_fwd, neg_return=neg_ret,
                       segments=seg)


def _log_current(i):
    return np.log10(np.maximum(np.abs(i), CURRENT_FLOOR_A))


def _set_voltage(split):
    fwd = split.pos_forward
    v, i = fwd.v, fwd.i
    slope = np.gradient(_log_current(i), v)
    apex = v[-1]
    usable = ((v >= SET_DETECT_MASK_FRACTION * apex)
              & (np.abs(i) >= 10 * CURRENT_FLOOR_A))
    usable[0] = usable[-1] = False   # one-sided gradient edges
    if not usable.any():
        raise NoSetEvent("no usable samples on the positive forward branch")

    ret = split.pos_return
    base_mask = ((ret.v >= BASELINE_MASK_FRACTION * apex)
                 & (np.abs(ret.i) >= 10 * CURRENT_FLOOR_A))
    base_slope = np.gradient(_log_current(ret.i), ret.v)
    baseline = float(base_slope[base_mask].max()) if base_mask.any() else 0.0
    threshold = max(SET_MIN_SLOPE_DECADES_PER_V,
                    SET_BASELINE_FACTOR * baseline)

    masked = np.where(usable, slope, -np.inf)
    k = int(np.argmax(masked))   # first maximum = smallest voltage on ties
    if masked[k] < threshold:
        raise NoSetEvent(
            f"max log-current slope {masked[k]:.3g}/V below threshold "
            f"{threshold:.3g}/V")
    return float(v[k])


def _reset_voltage(split):
    """First prominent |i| peak scanning from zero bias toward the apex.

    Compliance can flatten the peak into a plateau, and on wide sweeps the
    post-reset HRS current may rise again (even re-clamp) near the apex, so
    the event is the onset of the first confirmed decay, not the global
    maximum.
    """
    fwd = split.neg_forward
    v, absi = fwd.v, np.abs(fwd.i)
    run_max = 0.0
    knee = None
    # Grid is ascending in v; sweep order goes from v=0 down to the apex.
    for k in range(len(v) - 1, -1, -1):
        a = absi[k]
        if a >= run_max * (1.0 - PLATEAU_REL_TOL):
            if a > run_max:
                run_max = a
            knee = k
            continue
        if (run_max > 10 * CURRENT_FLOOR_A and v[knee] < 0
                and a <= (1.0 - RESET_DECLINE_FRACTION) * run_max):
            return float(v[knee])
    if run_max <= 10 * CURRENT_FLOOR_A:
        raise NoResetEvent("negative-branch currents at the noise floor")
    raise NoResetEvent(
        f"current never decays {RESET_DECLINE_FRACTION:.0%} beyond a peak")


def _window_slope(branch, v_lo, v_hi):
    mask = (branch.v >= v_lo) & (branch.v <= v_hi)
    if int(mask.sum()) < MIN_WINDOW_SAMPLES:
        raise DegenerateWindow(
            f"{int(mask.sum())} samples in [{v_lo:.4g}, {v_hi:.4g}]")
    return float(np.polyfit(branch.v[mask], branch.i[mask], 1)[0])


def _lrs_slope(split, v_set, v_reset, i_compliance):
    width = SLOPE_WINDOW_FRACTION * abs(v_set)
    ret = split.pos_return
    mask = (ret.v >= v_set - width) & (ret.v <= v_set)
    clamped = 0.0
    if i_compliance is not None and mask.any():
        clamped = float(np.mean(np.abs(ret.i[mask]) >= 0.999 * i_compliance))
    if clamped < CLAMP_FRACTION_FOR_FALLBACK:
        return _window_slope(ret, v_set - width, v_set), "set-region"
    width = SLOPE_WINDOW_FRACTION * abs(v_reset)
    hi = min(v_reset + width, 0.0)
    return (_window_slope(split.neg_forward, v_reset, hi), "reset-region")


def _loop_areas(split):
    pos = abs(np.trapezoid(split.pos_return.i - split.pos_forward.i,
                           split.pos_forward.v))
    neg = abs(np.trapezoid(split.neg_return.i - split.neg_forward.i,
                           split.neg_forward.v))
    return float(pos), float(neg)


def extract_vset(trace, split=None):
    """Set voltage: steepest rise of log10|i| on the positive forward branch.

    Ties break toward the smaller voltage.  Raises NoSetEvent when the jump
    does not clear the smooth-conduction threshold.
    """
    return _set_voltage(split or split_branches(trace))


def extract_vreset(trace, split=None):
    """Reset voltage: onset of current decay on the negative forward branch."""
    return _reset_voltage(split or split_branches(trace))


def extract_lrs_slope(trace, i_compliance=None, split=None):
    """Low-resistance-state dI/dV and the window region used.

    The window sits just below v_set on the positive return branch; when at
    least half of it is compliance-clamped the slope is taken just above
    v_reset on the negative forward branch instead.
    """
    split = split or split_branches(trace)
    if i_compliance is None and trace.sweep is not None:
        i_compliance = trace.sweep.i_compliance
    v_set = _set_voltage(split)
    v_reset = _reset_voltage(split)
    return _lrs_slope(split, v_set, v_reset, i_compliance)


def extract_hysteresis_areas(trace, split=None):
    """(area_lrs, area_hrs): positive- and negative-half loop areas."""
    return _loop_areas(split or split_branches(trace))


def extract_metrics(trace, i_compliance=None):
    """All five metrics from one trace (single branch split)."""
    split = split_branches(trace)
    if i_compliance is None and trace.sweep is not None:
        i_compliance = trace.sweep.i_compliance
    v_set = _set_voltage(split)
    v_reset = _reset_voltage(split)
    slope, region = _lrs_slope(split, v_set, v_reset, i_compliance)
    area_lrs, area_hrs = _loop_areas(split)
    return NvmMetrics(v_set=v_set, v_reset=v_reset, lrs_slope=slope,
                      area_lrs=area_lrs, area_hrs=area_hrs,
                      slope_region=region)


def _event_sample_gap(trace, split, v_set, v_reset):
    a, b = split.segments["pos_forward"]
    k_set = a + int(np.argmin(np.abs(trace.v[a:b] - v_set)))
    a, b = split.segments["neg_forward"]
    k_reset = a + int(np.argmin(np.abs(trace.v[a:b] - v_reset)))
    return abs(k_reset - k_set)


def classify_trace(trace, i_compliance=None):
    """(metrics, reason): metrics when the trace shows usable hysteresis,
    otherwise None plus a prune-reason tag."""
    try:
        split = split_branches(trace)
    except MalformedSweep:
        return None, "malformed-sweep"
    if i_compliance is None and trace.sweep is not None:
        i_compliance = trace.sweep.i_compliance
    try:
        v_set = _set_voltage(split)
    except NoSetEvent:
        return None, "no-set-event"
    try:
        v_reset = _reset_voltage(split)
    except NoResetEvent:
        return None, "no-reset-event"
    try:
        slope, region = _lrs_slope(split, v_set, v_reset, i_compliance)
    except DegenerateWindow:
        return None, "degenerate-window"
    area_lrs, area_hrs = _loop_areas(split)
    try:
        metrics = NvmMetrics(v_set=v_set, v_reset=v_reset, lrs_slope=slope,
                             area_lrs=area_lrs, area_hrs=area_hrs,
                             slope_region=region)
    except InvalidParams:
        return None, "metric-invariant"
    v_span = float(trace.v.max() - trace.v.min())
    floor = AREA_FLOOR_COEFF * float(np.abs(trace.i).max()) * v_span
    if area_lrs < floor:
        return None, "area-floor"
    if _event_sample_gap(trace, split, v_set, v_reset) < MIN_EVENT_GAP_SAMPLES:
        return None, "event-gap"
    return metrics, None


def detect_hysteresis(trace, i_compliance=None):
    """True iff the trace carries a set event, a reset event and a loop area
    above the relative floor; extraction failures map to False."""
    metrics, _ = classify_trace(trace, i_compliance)
    return metrics is not None


__all__ = [
    "GRID_POINTS", "CURRENT_FLOOR_A", "SLOPE_WINDOW_FRACTION",
    "AREA_FLOOR_COEFF", "Branch", "BranchSplit", "NvmMetrics",
    "split_branches", "extract_vset", "extract_vreset", "extract_lrs_slope",
    "extract_hysteresis_areas", "extract_metrics", "classify_trace",
    "detect_hysteresis",
]
