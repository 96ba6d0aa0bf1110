"""Wire format of the estimate connector.

One request JSON object on stdin, one response JSON object on stdout.
The schema tags and field layout follow the fitting toolkit's estimator
interface; this module reimplements them so the trainer stays a separate
process with no library coupling.
"""

import json
import math

from .errors import SchemaViolation

REQUEST_SCHEMA = "rramfit-estimate-request/1"
RESPONSE_SCHEMA = "rramfit-estimate-response/1"

METRIC_FIELDS = ("v_set", "v_reset", "lrs_slope", "area_lrs", "area_hrs")
PARAM_FIELDS = ("i0", "g0", "v0_volt", "nu0", "beta", "gamma0")

# The image carries no current scale, so i0 cannot be predicted; the
# response fills it with the dataset constant and the downstream scale
# block owns the correction.
FIXED_I0 = 1e-4


def parse_request(text: str) -> dict:
    """Validated request payload: metrics, t_ox and a mandatory trace_path.

    Prediction renders the curve itself, so unlike the dataset-lookup
    estimator the trace path is not optional here.
    """
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"request is not JSON: {exc}") from None
    if not isinstance(d, dict) or d.get("schema") != REQUEST_SCHEMA:
        raise SchemaViolation(f"not a {REQUEST_SCHEMA} object")
    try:
        metrics = {k: float(d["metrics"][k]) for k in METRIC_FIELDS}
        t_ox = float(d["t_ox"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaViolation(f"bad estimate request: {exc}") from None
    if not all(math.isfinite(v) for v in metrics.values()):
        raise SchemaViolation("metrics must be finite")
    if not (math.isfinite(t_ox) and t_ox > 0):
        raise SchemaViolation("t_ox must be positive and finite")
    trace_path = d.get("trace_path")
    if not isinstance(trace_path, str) or not trace_path:
        raise SchemaViolation("request must carry a trace_path")
    return {"metrics": metrics, "t_ox": t_ox, "trace_path": trace_path}


def build_response(params: dict, diagnostics: dict | None = None) -> dict:
    missing = [k for k in PARAM_FIELDS if k not in params]
    if missing:
        raise SchemaViolation(f"params missing {missing}")
    out = {"schema": RESPONSE_SCHEMA,
           "params": {k: float(params[k]) for k in PARAM_FIELDS},
           "source": "external"}
    if diagnostics:
        out["diagnostics"] = diagnostics
    return out
