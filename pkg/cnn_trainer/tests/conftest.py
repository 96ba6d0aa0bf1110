"""Shared fixtures: everything from the fitting toolkit is consumed
through its command line and file formats only."""

import json
import subprocess
import sys

import numpy as np
import pytest

RRAMFIT = [sys.executable, "-m", "rramfit"]
PREDICT = f"{sys.executable} -m cnn_trainer.cli predict"


def run_rramfit(*args, check=True):
    proc = subprocess.run([*RRAMFIT, *map(str, args)],
                          capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(
            f"rramfit {' '.join(map(str, args))} failed "
            f"({proc.returncode}): {proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def reference_trace(tmp_path_factory):
    """One simulated benchmark sweep, fetched over the CLI boundary."""
    path = tmp_path_factory.mktemp("trace") / "pt_hfo2.csv"
    run_rramfit("simulate", "--device", "pt_hfo2", "-o", path)
    return path


def write_synthetic_dataset(out_dir, n, seed=0):
    """Fake rendered-dataset dir (random rasters) for trainer plumbing."""
    from cnn_trainer.render import STYLE
    from cnn_trainer.scalers import scalers_from_ranges, scalers_to_dict

    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = rng.integers(0, 256, size=(n, 224, 224, 3), dtype=np.uint8)
    labels = rng.random((n, 5)).astype(np.float32)
    t_ox_nm = rng.uniform(5.0, 20.0, n)
    np.savez_compressed(out_dir / "rendered.npz", images=images,
                        labels=labels, t_ox_nm=t_ox_nm,
                        record_ids=np.array([f"r{k:05d}" for k in range(n)]))
    ranges = {"g0": [1.5e-10, 2.5e-10, "linear"],
              "v0_volt": [0.15, 0.40, "linear"],
              "nu0": [1e-3, 20.0, "log"],
              "beta": [0.0, 2.1, "linear"],
              "gamma0": [0.0, 24.0, "linear"],
              "t_ox": [5e-9, 20e-9, "linear"]}
    scalers = scalers_from_ranges(ranges)
    (out_dir / "scalers.json").write_text(
        json.dumps(scalers_to_dict(scalers)))
    (out_dir / "style.json").write_text(json.dumps(STYLE))
    return out_dir
