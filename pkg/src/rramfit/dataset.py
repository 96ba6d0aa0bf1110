"""Random-device dataset generation.

Each draw samples model parameters (and an oxide thickness) from declared
ranges, simulates one bipolar sweep and keeps the draw only when the trace
classifies as usable hysteresis.  Draw k is seeded with ``[seed, k]`` so any
single draw is reproducible in isolation; acceptance walks draw indices in
order, which makes the dataset independent of worker count and batch size.

Records go to JSONL (one record per line) with a JSON stats sidecar that
also carries the signature standardization moments used by the estimator.
"""
from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyDataset, SchemaViolation, YieldTooLow
from .metrics import NvmMetrics, classify_trace
from .model import ModelParams, SweepSpec, simulate_sweep
from .traceio import write_atomic, write_trace

__all__ = [
    "PARAM_RANGES", "FIXED_I0", "DatasetRecord", "sample_params",
    "generate_dataset", "write_dataset", "load_dataset", "dataset_stats",
]

# name -> (lo, hi, scale); scale is "linear" or "log".
PARAM_RANGES = {
    "g0": (1.5e-10, 2.5e-10, "linear"),
    "v0_volt": (0.15, 0.40, "linear"),
    "nu0": (1e-3, 20.0, "log"),
    "beta": (0.0, 2.1, "linear"),
    "gamma0": (0.0, 24.0, "linear"),
    "t_ox": (5e-9, 20e-9, "linear"),
}
FIXED_I0 = 1e-4

MAX_DRAW_FACTOR = 100  # attempt cap; yield below 1% raises YieldTooLow


def _check_ranges(ranges):
    for name in PARAM_RANGES:
        if name not in ranges:
            raise SchemaViolation(f"ranges missing {name!r}")
        lo, hi, scale = ranges[name]
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise SchemaViolation(f"bad range for {name!r}: [{lo}, {hi}]")
        if scale not in ("linear", "log"):
            raise SchemaViolation(f"bad scale for {name!r}: {scale!r}")
        if scale == "log" and lo < hi and lo <= 0:
            raise SchemaViolation(f"log range for {name!r} needs lo > 0")
    return ranges


@dataclass(frozen=True)
class DatasetRecord:
    record_id: str
    draw_index: int
    params: ModelParams
    t_ox: float
    metrics: NvmMetrics
    trace_path: str | None = None

    def to_dict(self) -> dict:
        d = {"record_id": self.record_id, "draw_index": self.draw_index,
             "params": self.params.to_dict(), "t_ox": self.t_ox,
             "metrics": self.metrics.to_dict()}
        if self.trace_path is not None:
            d["trace_path"] = self.trace_path
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetRecord":
        try:
            return cls(record_id=str(d["record_id"]),
                       draw_index=int(d["draw_index"]),
                       params=ModelParams.from_dict(d["params"]),
                       t_ox=float(d["t_ox"]),
                       metrics=NvmMetrics.from_dict(d["metrics"]),
                       trace_path=d.get("trace_path"))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad dataset record: {exc}") from None


def _record_id(params: ModelParams, t_ox: float, sweep: SweepSpec) -> str:
    payload = json.dumps([params.to_dict(), t_ox, sweep.to_dict()],
                         sort_keys=True)
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


def _draw_one(rng, lo, hi, scale):
    if lo == hi:
        return float(lo)
    if scale == "log":
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    return float(rng.uniform(lo, hi))


def sample_params(seed: int, draw_index: int, ranges=None,
                  i0=FIXED_I0) -> tuple[ModelParams, float]:
    """The (params, t_ox) of draw `draw_index` under `seed`."""
    ranges = _check_ranges(ranges or PARAM_RANGES)
    rng = np.random.default_rng([seed, draw_index])
    drawn = {name: _draw_one(rng, *ranges[name])
             for name in ("g0", "v0_volt", "nu0", "beta", "gamma0", "t_ox")}
    t_ox = drawn.pop("t_ox")
    return ModelParams(i0=i0, **drawn), t_ox


def _eval_draw(args):
    seed, k, sweep_dict, ranges, traces_dir = args
    params, t_ox = sample_params(seed, k, ranges)
    sweep = replace(SweepSpec.from_dict(sweep_dict), t_ox=t_ox)
    trace = simulate_sweep(params, sweep)
    metrics, reason = classify_trace(trace)
    if metrics is None:
        return k, None, reason
    record_id = _record_id(params, t_ox, sweep)
    trace_path = None
    if traces_dir is not None:
        trace_path = f"{traces_dir}/{record_id}.csv"
        write_trace(trace, trace_path)
    rec = DatasetRecord(record_id=record_id, draw_index=k, params=params,
                        t_ox=t_ox, metrics=metrics, trace_path=trace_path)
    return k, rec, None


def signature_moments(records):
    """Mean/std per signature component, floored std (sidecar payload)."""
    from .estimator import SIGNATURE_FIELDS, signature_vector

    sigs = np.stack([signature_vector(r.metrics, r.t_ox) for r in records])
    return {"fields": list(SIGNATURE_FIELDS),
            "mean": [float(x) for x in sigs.mean(axis=0)],
            "std": [float(x) for x in np.maximum(sigs.std(axis=0), 1e-12)]}


def generate_dataset(n_records, seed=0, sweep=None, ranges=None,
                     n_workers=None, traces_dir=None, progress=None):
    """Accept the first `n_records` classified draws in draw-index order.

    Returns (records, stats).  `progress` gets (accepted, evaluated) after
    each batch.  With `traces_dir` set, accepted traces are written there
    as ``<record_id>.csv`` and referenced from the records.
    """
    if n_records <= 0:
        raise EmptyDataset("n_records must be positive")
    ranges = _check_ranges(ranges or PARAM_RANGES)
    sweep = sweep or SweepSpec()
    sweep_dict = sweep.to_dict()
    if traces_dir is not None:
        traces_dir = str(traces_dir)
    t0 = time.monotonic()

    records = []
    prune: dict[str, int] = {}
    max_draws = MAX_DRAW_FACTOR * n_records
    batch = 256
    next_k = 0
    pool = ProcessPoolExecutor(n_workers) if (n_workers or 0) > 1 else None
    try:
        while len(records) < n_records and next_k < max_draws:
            ks = range(next_k, min(next_k + batch, max_draws))
            args = [(seed, k, sweep_dict, ranges, traces_dir) for k in ks]
            if pool is not None:
                results = list(pool.map(_eval_draw, args, chunksize=16))
            else:
                results = [_eval_draw(a) for a in args]
            for idx, (k, rec, reason) in enumerate(results):
                # Results arrive in draw order regardless of worker count.
                if rec is not None:
                    records.append(rec)
                else:
                    prune[reason] = prune.get(reason, 0) + 1
                if len(records) == n_records:
                    next_k = k + 1
                    # Draws past the cut were evaluated speculatively;
                    # drop any traces they already wrote.
                    for _, extra, _ in results[idx + 1:]:
                        if extra is not None and extra.trace_path:
                            try:
                                os.unlink(extra.trace_path)
                            except OSError:
                                pass
                    break
            else:
                next_k = ks.stop
            if progress is not None:
                progress(len(records), next_k)
    finally:
        if pool is not None:
            pool.shutdown()

    if len(records) < n_records:
        raise YieldTooLow(
            f"{len(records)}/{n_records} usable devices after {next_k} "
            f"draws; prune histogram: {prune}")
    stats = {
        "seed": seed,
        "n_records": n_records,
        "draws_evaluated": next_k,
        "yield": n_records / next_k,
        "pruned": dict(sorted(prune.items())),
        "ranges": {k: [v[0], v[1], v[2]] for k, v in ranges.items()},
        "i0": FIXED_I0,
        "sweep": sweep_dict,
        "signature": signature_moments(records),
        "elapsed_s": round(time.monotonic() - t0, 3),
    }
    return records, stats


def write_dataset(records, path, stats=None, stats_path=None):
    lines = [json.dumps(r.to_dict(), sort_keys=True) for r in records]
    write_atomic(path, "\n".join(lines) + "\n")
    if stats is not None:
        stats_path = stats_path or str(path) + ".stats.json"
        write_atomic(stats_path, json.dumps(stats, indent=2, sort_keys=True)
                     + "\n")


def load_dataset(path):
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolation(
                    f"{path}:{lineno}: not valid JSON ({exc})") from None
            records.append(DatasetRecord.from_dict(d))
    if not records:
        raise EmptyDataset(f"no records in {path}")
    return records


def dataset_stats(records):
    """Quick summary of a loaded dataset (per-metric spans)."""
    def span(vals):
        arr = np.asarray(vals, dtype=float)
        return {"min": float(arr.min()), "max": float(arr.max()),
                "median": float(np.median(arr))}

    return {
        "n_records": len(records),
        "v_set": span([r.metrics.v_set for r in records]),
        "v_reset": span([r.metrics.v_reset for r in records]),
        "lrs_slope": span([r.metrics.lrs_slope for r in records]),
        "area_lrs": span([r.metrics.area_lrs for r in records]),
        "t_ox": span([r.t_ox for r in records]),
    }
