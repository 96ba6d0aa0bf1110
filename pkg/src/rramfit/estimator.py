"""Initial parameter estimates from switching metrics.

Two interchangeable sources:

* ``NearestNeighborEstimator`` looks up the closest dataset records in a
  standardized metric-signature space and returns the component-wise median
  of their parameters.
* ``ExternalEstimator`` shells out to any program speaking the JSON
  request/response protocol below on stdin/stdout, so a learned regressor
  can stand in for the lookup without changing the fitter.

Protocol (one JSON object each way):

    request  = {"schema": "rramfit-estimate-request/1",
                "metrics": {"v_set": .., "v_reset": .., "lrs_slope": ..,
                            "area_lrs": .., "area_hrs": ..},
                "t_ox": <meters>, "trace_path": <str>?}
    response = {"schema": "rramfit-estimate-response/1",
                "params": {"i0": .., "g0": .., "v0_volt": .., "nu0": ..,
                           "beta": .., "gamma0": ..},
                "source": <str>, "neighbor_ids": [..]?,
                "confidence": <float>?, "diagnostics": {..}?}
"""
from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConnectorFailure, EmptyDataset, InvalidParams,
                     SchemaViolation)
from .metrics import NvmMetrics

__all__ = [
    "REQUEST_SCHEMA", "RESPONSE_SCHEMA", "SIGNATURE_FIELDS",
    "EstimateResult", "signature_vector", "NearestNeighborEstimator",
    "ExternalEstimator", "build_request", "parse_request", "build_response",
    "parse_response",
]

REQUEST_SCHEMA = "rramfit-estimate-request/1"
RESPONSE_SCHEMA = "rramfit-estimate-response/1"
SIGNATURE_FIELDS = ("v_set", "v_reset", "log10_lrs_slope", "log10_area_lrs",
                    "log10_area_hrs", "t_ox_nm")

DEFAULT_NEIGHBORS = 5
_LOG_FLOOR = 1e-30


@dataclass(frozen=True)
class EstimateResult:
    params: "ModelParams"
    source: str
    neighbor_ids: tuple = ()
    distances: tuple = ()
    confidence: float | None = None
    diagnostics: dict = field(default_factory=dict)


def signature_vector(metrics: NvmMetrics, t_ox: float) -> np.ndarray:
    """Six-component lookup signature; heavy-tailed metrics enter as logs."""
    return np.array([
        metrics.v_set,
        metrics.v_reset,
        math.log10(max(metrics.lrs_slope, _LOG_FLOOR)),
        math.log10(max(metrics.area_lrs, _LOG_FLOOR)),
        math.log10(max(metrics.area_hrs, _LOG_FLOOR)),
        t_ox * 1e9,
    ])


class NearestNeighborEstimator:
    """k-NN over dataset records, standardized per signature component."""

    def __init__(self, records, k=DEFAULT_NEIGHBORS, moments=None):
        if not records:
            raise EmptyDataset("estimator needs at least one record")
        if k < 1:
            raise SchemaViolation("k must be >= 1")
        self.records = list(records)
        self.k = k
        sigs = np.stack([signature_vector(r.metrics, r.t_ox)
                         for r in self.records])
        if moments is not None:
            # Standardization moments from the dataset sidecar.
            self._mean = np.asarray(moments["mean"], dtype=float)
            self._std = np.asarray(moments["std"], dtype=float)
            if self._mean.shape != (len(SIGNATURE_FIELDS),) or \
                    self._std.shape != (len(SIGNATURE_FIELDS),):
                raise SchemaViolation("bad signature moments shape")
        else:
            self._mean = sigs.mean(axis=0)
            self._std = np.maximum(sigs.std(axis=0), 1e-12)
        self._z = (sigs - self._mean) / self._std

    def estimate(self, metrics: NvmMetrics, t_ox: float,
                 k: int | None = None) -> EstimateResult:
        from .model import ModelParams

        k = self.k if k is None else k
        k = min(k, len(self.records))
        z = (signature_vector(metrics, t_ox) - self._mean) / self._std
        dist = np.sqrt(((self._z - z) ** 2).sum(axis=1))
        # Stable under exact ties: order by (distance, record_id).
        order = sorted(range(len(dist)),
                       key=lambda j: (dist[j], self.records[j].record_id))
        picks = [self.records[j] for j in order[:k]]

        def med(get, log=False):
            vals = np.array([get(r.params) for r in picks])
            if log:
                return float(np.exp(np.median(np.log(vals))))
            return float(np.median(vals))

        params = ModelParams(
            i0=med(lambda p: p.i0, log=True),
            g0=med(lambda p: p.g0),
            v0_volt=med(lambda p: p.v0_volt),
            nu0=med(lambda p: p.nu0, log=True),
            beta=med(lambda p: p.beta),
            gamma0=med(lambda p: p.gamma0),
        )
        d_near = tuple(float(dist[j]) for j in order[:k])
        return EstimateResult(
            params=params, source="nearest-neighbor",
            neighbor_ids=tuple(r.record_id for r in picks),
            distances=d_near,
            confidence=float(1.0 / (1.0 + d_near[-1])))


def build_request(metrics: NvmMetrics, t_ox: float,
                  trace_path: str | None = None) -> dict:
    req = {"schema": REQUEST_SCHEMA,
           "metrics": {"v_set": metrics.v_set, "v_reset": metrics.v_reset,
                       "lrs_slope": metrics.lrs_slope,
                       "area_lrs": metrics.area_lrs,
                       "area_hrs": metrics.area_hrs},
           "t_ox": t_ox}
    if trace_path is not None:
        req["trace_path"] = str(trace_path)
    return req


def parse_request(d: dict) -> tuple[NvmMetrics, float]:
    if not isinstance(d, dict) or d.get("schema") != REQUEST_SCHEMA:
        raise SchemaViolation(f"not a {REQUEST_SCHEMA} object")
    try:
        m = d["metrics"]
        metrics = NvmMetrics(v_set=float(m["v_set"]),
                             v_reset=float(m["v_reset"]),
                             lrs_slope=float(m["lrs_slope"]),
                             area_lrs=float(m["area_lrs"]),
                             area_hrs=float(m["area_hrs"]))
        t_ox = float(d["t_ox"])
    except (KeyError, TypeError, ValueError, InvalidParams) as exc:
        raise SchemaViolation(f"bad estimate request: {exc}") from None
    if not (math.isfinite(t_ox) and t_ox > 0):
        raise SchemaViolation("t_ox must be positive and finite")
    trace_path = d.get("trace_path")
    if trace_path is not None and not isinstance(trace_path, str):
        raise SchemaViolation("trace_path must be a string")
    return metrics, t_ox, trace_path


def build_response(params, source: str, neighbor_ids=(),
                   confidence: float | None = None,
                   diagnostics: dict | None = None):
    out = {"schema": RESPONSE_SCHEMA, "params": params.to_dict(),
           "source": source}
    if neighbor_ids:
        out["neighbor_ids"] = list(neighbor_ids)
    if confidence is not None:
        out["confidence"] = confidence
    if diagnostics:
        out["diagnostics"] = diagnostics
    return out


def parse_response(d: dict) -> EstimateResult:
    from .model import ModelParams

    if not isinstance(d, dict) or d.get("schema") != RESPONSE_SCHEMA:
        raise SchemaViolation(f"not a {RESPONSE_SCHEMA} object")
    try:
        params = ModelParams.from_dict(d["params"])
    except (KeyError, TypeError, ValueError, InvalidParams) as exc:
        raise SchemaViolation(f"bad estimate response: {exc}") from None
    diagnostics = d.get("diagnostics") or {}
    if not isinstance(diagnostics, dict):
        raise SchemaViolation("diagnostics must be an object")
    neighbor_ids = d.get("neighbor_ids") or []
    if not isinstance(neighbor_ids, list) or \
            any(not isinstance(x, str) for x in neighbor_ids):
        raise SchemaViolation("neighbor_ids must be a list of strings")
    confidence = d.get("confidence")
    if confidence is not None:
        confidence = float(confidence)
        if not math.isfinite(confidence):
            raise SchemaViolation("confidence must be finite")
    return EstimateResult(params=params,
                          source=str(d.get("source", "external")),
                          neighbor_ids=tuple(neighbor_ids),
                          confidence=confidence,
                          diagnostics=diagnostics)


class ExternalEstimator:
    """Run `command`, write one request JSON to stdin, read one response."""

    def __init__(self, command, timeout_s=120.0):
        if isinstance(command, str):
            command = [command]
        if not command:
            raise ConnectorFailure("empty connector command")
        self.command = list(command)
        self.timeout_s = timeout_s

    def estimate(self, metrics: NvmMetrics, t_ox: float,
                 trace_path: str | None = None) -> EstimateResult:
        request = json.dumps(build_request(metrics, t_ox, trace_path))
        try:
            proc = subprocess.run(
                self.command, input=request, capture_output=True,
                text=True, timeout=self.timeout_s)
        except subprocess.TimeoutExpired:
            raise ConnectorFailure(
                f"{self.command[0]}: no response within {self.timeout_s:g}s")
        except OSError as exc:
            raise ConnectorFailure(f"{self.command[0]}: {exc}") from None
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] or ["<no stderr>"]
            raise ConnectorFailure(
                f"{self.command[0]}: exit {proc.returncode} ({tail[0]})")
        try:
            payload = json.loads(proc.stdout)
        except json.JSONDecodeError as exc:
            raise ConnectorFailure(
                f"{self.command[0]}: response is not JSON ({exc})") from None
        try:
            return parse_response(payload)
        except SchemaViolation as exc:
            raise ConnectorFailure(f"{self.command[0]}: {exc}") from None
