"""Rendering a real (tiny) generated dataset into the training archive."""

import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import run_rramfit

from cnn_trainer.data import build_rendered_dataset, load_rendered_dataset
from cnn_trainer.errors import DatasetTooSmall, SchemaViolation


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    """Six records with retained traces, over the generator CLI."""
    out = tmp_path_factory.mktemp("tiny")
    run_rramfit("gen-dataset", "--n-target", 6, "--seed", 5,
                "--outdir", out, "--keep-traces", "--workers", 2)
    return out / "records.jsonl"


class TestBuildRenderedDataset:
    def test_end_to_end(self, tiny_dataset, tmp_path):
        ticks = []
        n = build_rendered_dataset(tiny_dataset, tmp_path / "r",
                                   progress=lambda k, n: ticks.append(k))
        assert n == 6
        assert ticks == list(range(1, 7))
        data = load_rendered_dataset(tmp_path / "r")
        assert data["images"].shape == (6, 224, 224, 3)
        assert data["images"].dtype == np.uint8
        assert data["labels"].shape == (6, 5)
        assert data["labels"].dtype == np.float32
        assert np.all(data["labels"] >= 0.0)
        assert np.all(data["labels"] <= 1.0)
        assert np.all(data["t_ox_nm"] >= 5.0)
        assert np.all(data["t_ox_nm"] <= 20.0)
        assert len(set(data["record_ids"])) == 6
        assert data["style"]["version"] == "iv-raster/1"
        # every raster actually contains a curve
        assert all(img.min() < 128 for img in data["images"])

    def test_limit(self, tiny_dataset, tmp_path):
        assert build_rendered_dataset(tiny_dataset, tmp_path / "r",
                                      limit=2) == 2
        data = load_rendered_dataset(tmp_path / "r")
        assert len(data["images"]) == 2

    def test_rebuild_is_identical(self, tiny_dataset, tmp_path):
        build_rendered_dataset(tiny_dataset, tmp_path / "a")
        build_rendered_dataset(tiny_dataset, tmp_path / "b")
        a = load_rendered_dataset(tmp_path / "a")
        b = load_rendered_dataset(tmp_path / "b")
        assert np.array_equal(a["images"], b["images"])
        assert np.array_equal(a["labels"], b["labels"])

    def test_missing_stats_sidecar(self, tiny_dataset, tmp_path):
        with pytest.raises(SchemaViolation, match="sidecar"):
            build_rendered_dataset(tiny_dataset, tmp_path / "r",
                                   stats_path=tmp_path / "gone.json")

    def test_record_without_trace_path(self, tiny_dataset, tmp_path):
        records = tiny_dataset.read_text().splitlines()
        first = json.loads(records[0])
        first.pop("trace_path", None)
        stripped = tmp_path / "records.jsonl"
        stripped.write_text("\n".join([json.dumps(first)] + records[1:]))
        with pytest.raises(SchemaViolation, match="trace retention"):
            build_rendered_dataset(
                stripped, tmp_path / "r",
                stats_path=tiny_dataset.with_name(
                    tiny_dataset.name + ".stats.json"))

    def test_garbage_record_line(self, tiny_dataset, tmp_path):
        bad = tmp_path / "records.jsonl"
        bad.write_text(tiny_dataset.read_text() + "{oops\n")
        with pytest.raises(SchemaViolation, match=":7:"):
            build_rendered_dataset(
                bad, tmp_path / "r",
                stats_path=tiny_dataset.with_name(
                    tiny_dataset.name + ".stats.json"))

    def test_empty_records_file(self, tiny_dataset, tmp_path):
        empty = tmp_path / "records.jsonl"
        empty.write_text("\n")
        with pytest.raises(DatasetTooSmall):
            build_rendered_dataset(
                empty, tmp_path / "r",
                stats_path=tiny_dataset.with_name(
                    tiny_dataset.name + ".stats.json"))


class TestLoadValidation:
    def test_missing_dir(self, tmp_path):
        with pytest.raises(SchemaViolation, match="cannot load"):
            load_rendered_dataset(tmp_path / "nope")

    def test_length_disagreement(self, tiny_dataset, tmp_path):
        build_rendered_dataset(tiny_dataset, tmp_path / "r", limit=3)
        with np.load(tmp_path / "r" / "rendered.npz") as z:
            arrays = {k: z[k] for k in z.files}
        arrays["labels"] = arrays["labels"][:2]
        np.savez_compressed(tmp_path / "r" / "rendered.npz", **arrays)
        with pytest.raises(SchemaViolation, match="length"):
            load_rendered_dataset(tmp_path / "r")


class TestRenderCli:
    def test_subcommand(self, tiny_dataset, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "cnn_trainer.cli", "render",
             "--records", str(tiny_dataset), "--outdir",
             str(tmp_path / "r"), "--limit", "4"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert "rendered 4 samples" in proc.stdout
        assert load_rendered_dataset(tmp_path / "r")["images"].shape[0] == 4

    def test_error_reporting(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "cnn_trainer.cli", "render",
             "--records", str(tmp_path / "gone.jsonl"),
             "--outdir", str(tmp_path / "r")],
            capture_output=True, text=True)
        assert proc.returncode == 1
        err = json.loads(proc.stderr)
        assert err["error"] == "SchemaViolation"
