"""Figure rendering smoke tests (Agg backend, files only)."""
import numpy as np
import pytest

from rramfit.devices import get_device
from rramfit.metrics import extract_metrics
from rramfit.model import simulate_sweep
from rramfit.plotting import save_fit_figure, save_trace_figure

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.fixture(scope="module")
def device_trace():
    dev = get_device("pt_hfo2")
    trace = simulate_sweep(dev.params, dev.sweep)
    metrics = extract_metrics(trace, i_compliance=dev.sweep.i_compliance)
    return trace, metrics


def _assert_png(path):
    data = path.read_bytes()
    assert data[:8] == PNG_MAGIC
    assert len(data) > 1000


def test_trace_figure_written(tmp_path, device_trace):
    trace, metrics = device_trace
    out = tmp_path / "trace.png"
    got = save_trace_figure(trace, out, metrics=metrics, title="loop")
    assert got == out
    _assert_png(out)


def test_trace_figure_without_metrics(tmp_path, device_trace):
    trace, _ = device_trace
    out = tmp_path / "bare.png"
    save_trace_figure(trace, out)
    _assert_png(out)


def test_fit_figure_overlays_stages(tmp_path, device_trace):
    trace, metrics = device_trace
    stages = {"estimate": trace, "fitted": trace}
    out = tmp_path / "fit.png"
    save_fit_figure(trace, stages, out, metrics=metrics)
    _assert_png(out)


def test_fit_figure_without_reference_trace(tmp_path, device_trace):
    trace, _ = device_trace
    out = tmp_path / "noref.png"
    save_fit_figure(None, {"fitted": trace}, out)
    _assert_png(out)


def test_rerender_is_deterministic(tmp_path, device_trace):
    trace, metrics = device_trace
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    save_trace_figure(trace, a, metrics=metrics)
    save_trace_figure(trace, b, metrics=metrics)
    assert a.read_bytes() == b.read_bytes()
