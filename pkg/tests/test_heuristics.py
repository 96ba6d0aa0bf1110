"""Search primitive and matching-block tests with frozen oracles."""
import math
from dataclasses import replace

import numpy as np
import pytest

from rramfit.devices import get_device
from rramfit.errors import NonFiniteObjective, PipelineError
from rramfit.heuristics import (
    DEFAULT_BOUNDS,
    FitReport,
    FitTolerances,
    PipelineConfig,
    SearchBounds,
    _Meter,
    adaptive_binary_search,
    block1_voltages,
    block2_slope,
    block3_area,
    relative_errors,
    run_pipeline,
)
from rramfit.metrics import classify_trace
from rramfit.model import simulate_sweep


def classified(params, sweep):
    metrics, reason = classify_trace(simulate_sweep(params, sweep))
    assert metrics is not None, reason
    return metrics


@pytest.fixture(scope="module")
def pt():
    dev = get_device("pt_hfo2")
    return dev, classified(dev.params, dev.sweep)


class TestAdaptiveBinarySearch:
    def test_linear_root(self):
        r = adaptive_binary_search(lambda x: x, SearchBounds(0.0, 1.0),
                                   target=0.5, tol=1e-12)
        assert r.converged and not r.saturated
        assert abs(r.x - 0.5) < 1e-9

    def test_quadratic_root(self):
        r = adaptive_binary_search(lambda x: x * x, SearchBounds(0.0, 2.0),
                                   target=2.0, tol=1e-12)
        assert r.converged
        assert abs(r.x - math.sqrt(2.0)) < 1e-9

    def test_immediate_endpoint_hit(self):
        r = adaptive_binary_search(lambda x: x, SearchBounds(0.0, 1.0),
                                   target=0.0, tol=1e-12)
        assert r.converged and r.iterations == 0 and r.x == 0.0

    def test_saturation_flag_without_expansion(self):
        r = adaptive_binary_search(lambda x: x, SearchBounds(0.0, 1.0),
                                   target=2.0, tol=1e-9)
        assert r.saturated and not r.converged
        assert r.x == 1.0     # best endpoint

    def test_widening_sequence_logged(self):
        bounds = SearchBounds(0.15, 0.40, hard_cap=1.5)
        r = adaptive_binary_search(lambda x: x, bounds, target=2.0,
                                   tol=1e-9, expansion=True)
        np.testing.assert_allclose(r.expansions, (0.6, 0.9, 1.35, 1.5),
                                   rtol=1e-12)
        assert r.saturated and r.x == 1.5

    def test_expansion_converges_inside_cap(self):
        bounds = SearchBounds(0.15, 0.40, hard_cap=1.5)
        r = adaptive_binary_search(lambda x: x, bounds, target=1.0,
                                   tol=1e-12, expansion=True)
        assert r.converged
        assert abs(r.x - 1.0) < 1e-9
        assert r.expansions   # got there by widening

    def test_iteration_bound_respected(self):
        calls = []
        r = adaptive_binary_search(lambda x: calls.append(x) or x,
                                   SearchBounds(0.0, 1.0),
                                   target=0.3333333, tol=0.0, max_iter=5)
        assert not r.converged and not r.saturated
        assert r.iterations == 5
        assert len(calls) == 2 + 5      # endpoints + bisections

    def test_interior_bracket_found_by_scan(self):
        # Endpoints sit on the same side; the crossing is interior.
        f = lambda x: (x - 1.0) ** 2
        r = adaptive_binary_search(f, SearchBounds(0.0, 2.0), target=0.3,
                                   tol=1e-12)
        assert r.converged
        assert abs(f(r.x) - 0.3) < 1e-9

    def test_prefer_near_picks_nearest_root(self):
        f = lambda x: (x - 1.0) ** 2
        hi = adaptive_binary_search(f, SearchBounds(0.0, 2.0), 0.3, 1e-12,
                                    prefer_near=1.6)
        lo = adaptive_binary_search(f, SearchBounds(0.0, 2.0), 0.3, 1e-12,
                                    prefer_near=0.4)
        assert hi.x == pytest.approx(1.0 + math.sqrt(0.3), abs=1e-6)
        assert lo.x == pytest.approx(1.0 - math.sqrt(0.3), abs=1e-6)

    def test_prefer_near_supplies_missing_bracket(self):
        # A tent narrower than the scan spacing is invisible to the grid;
        # the incumbent inside it rescues the search.
        def tent(x):
            return max(0.0, 10.0 * (1.0 - abs(x - 0.95) / 0.02))

        blind = adaptive_binary_search(tent, SearchBounds(0.0, 1.0), 5.0,
                                       1e-9)
        hinted = adaptive_binary_search(tent, SearchBounds(0.0, 1.0), 5.0,
                                        1e-9, prefer_near=0.95)
        assert blind.saturated and not blind.converged
        assert hinted.converged
        assert hinted.x == pytest.approx(0.96, abs=1e-6)

    def test_non_finite_objective_raises(self):
        with pytest.raises(NonFiniteObjective):
            adaptive_binary_search(lambda x: float("nan"),
                                   SearchBounds(0.0, 1.0), 0.5, 1e-9)

    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            SearchBounds(1.0, 1.0)
        with pytest.raises(ValueError):
            SearchBounds(0.0, 2.0, hard_cap=1.0)


class TestRelativeErrors:
    def test_signed_components(self, pt):
        _, ref = pt
        fit = replace(ref, v_set=ref.v_set * 1.1, lrs_slope=ref.lrs_slope
                      * 0.8)
        e = relative_errors(fit, ref)
        assert e["v_set"] == pytest.approx(0.1)
        assert e["lrs_slope"] == pytest.approx(-0.2)
        assert e["v_reset"] == 0.0
        assert e["area_lrs"] == 0.0


class TestResponseMonotonicity:
    """The searches lean on these directional responses."""

    def test_gamma0_deepens_reset(self, pt):
        dev, _ = pt
        seen = []
        for gamma0 in np.linspace(0.0, 24.0, 8):
            m, _ = classify_trace(simulate_sweep(
                replace(dev.params, gamma0=float(gamma0)), dev.sweep))
            if m is not None:
                seen.append(abs(m.v_reset))
        assert len(seen) >= 3   # low gamma0 never resets; the tail counts
        assert all(a >= b - 1e-9 for a, b in zip(seen, seen[1:]))

    def test_beta_raises_vset_leaves_vreset(self, pt):
        dev, _ = pt
        v_sets, v_resets = [], []
        for beta in np.linspace(0.0, 2.1, 8):
            m, _ = classify_trace(simulate_sweep(
                replace(dev.params, beta=float(beta)), dev.sweep))
            assert m is not None
            v_sets.append(m.v_set)
            v_resets.append(m.v_reset)
        assert all(a <= b + 1e-9 for a, b in zip(v_sets, v_sets[1:]))
        assert max(v_resets) - min(v_resets) <= 0.01 * abs(v_resets[0])


class TestBlocks:
    def test_block1_lands_voltages_and_rescales_i0(self, pt):
        dev, ref = pt
        init = replace(dev.params, gamma0=16.0, beta=1.6,
                       i0=dev.params.i0 * 3)
        out, info = block1_voltages(init, ref, dev.sweep, PipelineConfig(),
                                    _Meter())
        m = classified(out, dev.sweep)
        e = relative_errors(m, ref)
        assert abs(e["v_set"]) <= 0.02
        assert abs(e["v_reset"]) <= 0.02
        # LRS-area ratio pulls the tripled i0 back near the true scale.
        assert out.i0 == pytest.approx(dev.params.i0, rel=0.10)

    def test_block2_keeps_matching_incumbent(self, pt):
        dev, ref = pt
        meter = _Meter()
        out, info = block2_slope(dev.params, ref, dev.sweep,
                                 PipelineConfig(), meter)
        assert out == dev.params
        assert info["v0_volt"]["kept_incumbent"]
        assert meter.count == 1     # one classification, no search

    def test_block3_shrinks_area_error(self, pt):
        dev, ref = pt
        init = replace(dev.params, g0=dev.params.g0 * 0.75)
        before = classified(init, dev.sweep)
        out, info = block3_area(init, ref, dev.sweep, PipelineConfig(),
                                _Meter())
        after = classified(out, dev.sweep)
        err0 = abs(math.log(before.area_lrs / ref.area_lrs))
        err1 = abs(math.log(after.area_lrs / ref.area_lrs))
        assert out.g0 != init.g0
        assert err1 < err0
        assert err1 <= math.log(2.0)

    def test_block3_keeps_incumbent_inside_band(self, pt):
        dev, ref = pt
        init = replace(dev.params, g0=dev.params.g0 * 1.15)
        out, info = block3_area(init, ref, dev.sweep, PipelineConfig(),
                                _Meter())
        assert out.g0 == init.g0
        assert info["g0"].get("kept_incumbent")


class TestPipeline:
    def test_converges_from_mild_perturbation(self):
        dev = get_device("ti_sio2")
        ref = classified(dev.params, dev.sweep)
        init = replace(dev.params, v0_volt=0.34, gamma0=16.0)
        rep = run_pipeline(ref, dev.sweep, init, PipelineConfig())
        assert rep.converged
        assert [s.name for s in rep.stages[:4]] == [
            "estimate", "block1", "block2", "block3"]
        final = rep.errors
        assert abs(final["v_set"]) <= 0.02
        assert abs(final["v_reset"]) <= 0.02
        assert abs(final["lrs_slope"]) <= 0.10

    def test_report_round_trip_and_lookup(self):
        dev = get_device("ti_sio2")
        ref = classified(dev.params, dev.sweep)
        rep = run_pipeline(ref, dev.sweep, dev.params, PipelineConfig())
        d = rep.to_dict()
        assert set(d) == {"stages", "converged", "loops", "reloops",
                          "simulations", "tolerances", "notes"}
        assert d["stages"][0]["name"] == "estimate"
        assert rep.stage("block2").name == "block2"
        with pytest.raises(KeyError):
            rep.stage("block9")

    def test_hopeless_start_raises_with_partial_report(self, pt):
        dev, ref = pt
        with pytest.raises(PipelineError) as exc:
            run_pipeline(ref, dev.sweep, replace(dev.params, nu0=0.0),
                         PipelineConfig())
        assert exc.value.stage == "estimate"
        assert exc.value.report is not None
        assert [s.name for s in exc.value.report.stages] == ["estimate"]

    def test_default_config_values(self):
        cfg = PipelineConfig()
        assert cfg.expansion is False       # widening is opt-in
        assert cfg.max_loops >= 1
        assert cfg.tolerances == FitTolerances()

    def test_tolerance_validation(self):
        with pytest.raises(ValueError):
            FitTolerances(v_rel=0.0)
        with pytest.raises(ValueError):
            FitTolerances(area_factor=1.0)
