"""Wire protocol and the predict endpoint, in-process and over the CLI."""

import json
import math
import shutil
import subprocess
import sys

import pytest
from conftest import write_synthetic_dataset

from cnn_trainer.connector import answer_request
from cnn_trainer.errors import (CnnTrainerError, SchemaViolation,
                                StyleMismatch)
from cnn_trainer.protocol import (REQUEST_SCHEMA, RESPONSE_SCHEMA,
                                  build_response, parse_request)
from cnn_trainer.training import TrainConfig, train

PARAM_RANGES = {"i0": (1e-4, 1e-4), "g0": (1.5e-10, 2.5e-10),
                "v0_volt": (0.15, 0.40), "nu0": (1e-3, 20.0),
                "beta": (0.0, 2.1), "gamma0": (0.0, 24.0)}


@pytest.fixture(scope="module")
def artifact(tmp_path_factory):
    data = write_synthetic_dataset(
        tmp_path_factory.mktemp("conn") / "rendered", 500, seed=1)
    out = tmp_path_factory.mktemp("conn") / "artifact"
    train(data, TrainConfig(frozen_layers=0, epochs=1), out)
    return out


def make_request(trace_path, t_ox=10e-9, **over):
    payload = {"schema": REQUEST_SCHEMA,
               "metrics": {"v_set": 1.1, "v_reset": -1.3,
                           "lrs_slope": 2e-3, "area_lrs": 1e-3,
                           "area_hrs": 1e-4},
               "t_ox": t_ox,
               "trace_path": str(trace_path)}
    payload.update(over)
    return json.dumps(payload)


class TestParseRequest:
    def test_happy_path(self, tmp_path):
        req = parse_request(make_request(tmp_path / "t.csv"))
        assert req["t_ox"] == 10e-9
        assert req["metrics"]["v_reset"] == -1.3
        assert req["trace_path"].endswith("t.csv")

    def test_not_json(self):
        with pytest.raises(SchemaViolation, match="not JSON"):
            parse_request("{nope")

    def test_wrong_schema_tag(self):
        with pytest.raises(SchemaViolation, match="request"):
            parse_request(make_request("x.csv", schema="other/9"))

    def test_missing_metric(self):
        bad = json.loads(make_request("x.csv"))
        del bad["metrics"]["area_hrs"]
        with pytest.raises(SchemaViolation):
            parse_request(json.dumps(bad))

    def test_non_finite_metric(self):
        bad = json.loads(make_request("x.csv"))
        bad["metrics"]["v_set"] = float("nan")
        with pytest.raises(SchemaViolation, match="finite"):
            parse_request(json.dumps(bad))

    def test_trace_path_is_mandatory(self):
        bad = json.loads(make_request("x.csv"))
        del bad["trace_path"]
        with pytest.raises(SchemaViolation, match="trace_path"):
            parse_request(json.dumps(bad))
        with pytest.raises(SchemaViolation, match="trace_path"):
            parse_request(make_request(""))

    def test_bad_t_ox(self):
        with pytest.raises(SchemaViolation, match="t_ox"):
            parse_request(make_request("x.csv", t_ox=-1e-9))


class TestBuildResponse:
    def test_shape(self):
        params = {k: lo for k, (lo, _) in PARAM_RANGES.items()}
        resp = build_response(params, diagnostics={"note": "x"})
        assert resp["schema"] == RESPONSE_SCHEMA
        assert resp["source"] == "external"
        assert resp["diagnostics"] == {"note": "x"}
        assert set(resp["params"]) == set(PARAM_RANGES)

    def test_missing_param_rejected(self):
        with pytest.raises(SchemaViolation, match="gamma0"):
            build_response({"i0": 1e-4})


class TestAnswerRequest:
    def test_round_trip(self, artifact, reference_trace):
        line = answer_request(make_request(reference_trace), artifact)
        resp = json.loads(line)
        assert resp["schema"] == RESPONSE_SCHEMA
        assert resp["source"] == "external"
        params = resp["params"]
        assert params["i0"] == 1e-4
        for name, (lo, hi) in PARAM_RANGES.items():
            assert lo <= params[name] <= hi
            assert math.isfinite(params[name])
        assert resp["diagnostics"]["t_ox_nm"] == pytest.approx(10.0)

    def test_is_deterministic(self, artifact, reference_trace):
        req = make_request(reference_trace)
        assert answer_request(req, artifact) == \
            answer_request(req, artifact)

    def test_missing_trace_file(self, artifact, tmp_path):
        with pytest.raises(CnnTrainerError, match="cannot read"):
            answer_request(make_request(tmp_path / "gone.csv"), artifact)

    def test_style_lock(self, artifact, reference_trace, tmp_path):
        tampered = tmp_path / "artifact"
        shutil.copytree(artifact, tampered)
        style = json.loads((tampered / "style.json").read_text())
        style["version"] = "iv-raster/0"
        (tampered / "style.json").write_text(json.dumps(style))
        with pytest.raises(StyleMismatch, match="iv-raster/0"):
            answer_request(make_request(reference_trace), tampered)


class TestCliPredict:
    def run(self, artifact, stdin):
        return subprocess.run(
            [sys.executable, "-m", "cnn_trainer.cli", "predict",
             "--artifact", str(artifact)],
            input=stdin, capture_output=True, text=True)

    def test_stdin_to_stdout(self, artifact, reference_trace):
        proc = self.run(artifact, make_request(reference_trace))
        assert proc.returncode == 0, proc.stderr
        resp = json.loads(proc.stdout)
        assert resp["schema"] == RESPONSE_SCHEMA
        assert proc.stderr == ""

    def test_domain_error_exits_one_with_json(self, artifact):
        proc = self.run(artifact, "{broken")
        assert proc.returncode == 1
        assert proc.stdout == ""
        err = json.loads(proc.stderr)
        assert err["error"] == "SchemaViolation"
        assert "JSON" in err["message"]

    def test_usage_error_exits_two(self):
        proc = subprocess.run(
            [sys.executable, "-m", "cnn_trainer.cli", "predict"],
            input="", capture_output=True, text=True)
        assert proc.returncode == 2
