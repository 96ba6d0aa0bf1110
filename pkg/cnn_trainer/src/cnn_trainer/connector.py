"""Predict endpoint speaking the estimate request/response protocol.

One request on stdin, one response line on stdout, exit 0; any failure
prints a one-line JSON error object on stderr and exits 1.
"""

import json

from .artifact import Predictor
from .data import read_trace_csv
from .protocol import build_response, parse_request
from .render import STYLE_VERSION


def answer_request(text: str, artifact_dir: str) -> str:
    """Response line for one request payload; raises on any failure."""
    req = parse_request(text)
    predictor = Predictor.load(artifact_dir)
    v, i = read_trace_csv(req["trace_path"])
    t_ox_nm = req["t_ox"] * 1e9
    params = predictor.predict_curve(v, i, t_ox_nm)
    response = build_response(params, diagnostics={
        "style": STYLE_VERSION, "t_ox_nm": t_ox_nm})
    return json.dumps(response, sort_keys=True)
