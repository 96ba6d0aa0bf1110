"""Digitized-curve ingestion: smoothing and trace reconstruction."""
import numpy as np
import pytest

from rramfit.errors import AmbiguousSweep, InvalidParams, WindowTooLarge
from rramfit.ingest import RawCurve, load_raw_curve, rolling_average, to_trace
from rramfit.metrics import extract_metrics
from rramfit.model import SweepSpec, simulate_sweep
from rramfit.traceio import write_raw_curve

# Centered window 3 over [0,10,0,10,0], ends shrink to the two available
# neighbours: [5, 10/3, 20/3, 10/3, 5].
SAW = np.array([0.0, 10.0, 0.0, 10.0, 0.0])
SAW_SMOOTHED = np.array([5.0, 10.0 / 3.0, 20.0 / 3.0, 10.0 / 3.0, 5.0])


def saw_curve():
    return RawCurve(v=np.arange(5.0), i=SAW.copy())


def sim_curve(v0_volt=0.25, sweep=None):
    from rramfit.model import ModelParams

    sweep = sweep or SweepSpec(v_max=1.2, v_min=-1.2, t_ox=6.25e-9)
    params = ModelParams(i0=1.7e-4, g0=2.18e-10, v0_volt=v0_volt,
                         nu0=10.5, beta=2.10, gamma0=20.8)
    trace = simulate_sweep(params, sweep)
    return trace, RawCurve(v=trace.v, i=trace.i, source="sim"), sweep


class TestRawCurve:
    def test_rejects_single_point(self):
        with pytest.raises(InvalidParams):
            RawCurve(v=np.array([0.0]), i=np.array([0.0]))

    def test_rejects_nan(self):
        with pytest.raises(InvalidParams):
            RawCurve(v=np.array([0.0, np.nan, 1.0]), i=np.zeros(3))

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidParams):
            RawCurve(v=np.zeros(4), i=np.zeros(5))

    def test_arrays_are_frozen(self):
        c = saw_curve()
        with pytest.raises(ValueError):
            c.i[0] = 99.0

    def test_load_from_csv(self, tmp_path):
        path = tmp_path / "raw.csv"
        write_raw_curve([0.0, 0.5, 1.0], [1e-6, 2e-6, 3e-6], path)
        c = load_raw_curve(path)
        assert len(c) == 3
        assert c.source == str(path)


class TestRollingAverage:
    def test_window_one_is_identity(self):
        c = saw_curve()
        assert rolling_average(c, 1) is c

    def test_constant_current_unchanged(self):
        c = RawCurve(v=np.arange(9.0), i=np.full(9, 3.5))
        for w in (1, 3, 5, 9):
            assert np.array_equal(rolling_average(c, w).i, c.i)

    def test_hand_computed_shrunken_endpoints(self):
        out = rolling_average(saw_curve(), 3)
        np.testing.assert_allclose(out.i, SAW_SMOOTHED, rtol=1e-15)

    def test_voltages_and_count_preserved(self):
        c = saw_curve()
        out = rolling_average(c, 5)
        assert len(out) == len(c)
        assert np.array_equal(out.v, c.v)

    def test_even_window_rejected(self):
        with pytest.raises(WindowTooLarge):
            rolling_average(saw_curve(), 4)

    def test_oversized_window_rejected(self):
        with pytest.raises(WindowTooLarge):
            rolling_average(saw_curve(), 7)

    def test_full_window_is_global_mean(self):
        out = rolling_average(saw_curve(), 5)
        assert out.i[2] == pytest.approx(SAW.mean())


class TestToTrace:
    def test_round_trip_matches_simulator_metrics(self):
        trace, curve, sweep = sim_curve()
        rebuilt = to_trace(curve, sweep=sweep)
        a = extract_metrics(trace, i_compliance=sweep.i_compliance)
        b = extract_metrics(rebuilt, i_compliance=sweep.i_compliance)
        for name in ("v_set", "v_reset", "lrs_slope", "area_lrs",
                     "area_hrs"):
            assert getattr(b, name) == pytest.approx(
                getattr(a, name), rel=1e-12), name

    def test_timestamps_follow_sweep_duration(self):
        _, curve, sweep = sim_curve()
        rebuilt = to_trace(curve, sweep=sweep)
        assert rebuilt.t[0] == 0.0
        assert rebuilt.t[-1] == pytest.approx(sweep.duration)

    def test_no_sweep_uses_unit_spacing(self):
        _, curve, _ = sim_curve()
        rebuilt = to_trace(curve)
        assert np.array_equal(rebuilt.t, np.arange(len(curve), dtype=float))

    def test_single_polarity_is_ambiguous(self):
        c = RawCurve(v=np.linspace(0.0, 2.0, 16), i=np.linspace(0, 1e-4, 16))
        with pytest.raises(AmbiguousSweep):
            to_trace(c)

    def test_wrong_order_hint_is_ambiguous(self):
        _, curve, sweep = sim_curve()
        with pytest.raises(AmbiguousSweep):
            to_trace(curve, order="negative-first")
        with pytest.raises(AmbiguousSweep):
            to_trace(curve, sweep=SweepSpec(
                v_max=1.2, v_min=-1.2, t_ox=6.25e-9,
                polarity_order="negative-first"))

    def test_negative_first_curve_accepted(self):
        sweep = SweepSpec(v_max=1.2, v_min=-1.2, t_ox=6.25e-9,
                          polarity_order="negative-first")
        trace, curve, _ = sim_curve(sweep=sweep)
        rebuilt = to_trace(curve, order="negative-first")
        assert len(rebuilt) == len(trace)

    def test_structureless_points_are_ambiguous(self):
        # Alternating polarity every sample: apexes exist but the halves
        # cannot form four contiguous branches.
        v = np.array([0.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 0.5])
        c = RawCurve(v=v, i=np.linspace(0, 1e-5, 8))
        with pytest.raises(AmbiguousSweep):
            to_trace(c)
