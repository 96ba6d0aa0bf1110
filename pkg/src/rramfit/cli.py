"""Command-line surface.

Subcommands: simulate | metrics | gen-dataset | estimate | fit | plot-data.
Usage problems exit 2 (argparse's convention); domain failures exit 1 with a
one-line structured JSON error on stderr.  All file outputs go through
temp-file-plus-rename, and JSON payloads are key-sorted with no timestamps,
so reruns with identical inputs and seeds are byte-identical.

The only environment variable consulted is RRAMFIT_CONFIG, the default path
of the fit config JSON (flags still win).
"""

from __future__ import annotations

import argparse
import json
import shlex
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .dataset import generate_dataset, load_dataset, write_dataset
from .devices import BENCHMARK_DEVICES, get_device
from .errors import PipelineError, RramFitError, SchemaViolation
from .estimator import (DEFAULT_NEIGHBORS, EstimateResult, ExternalEstimator,
                        NearestNeighborEstimator, build_response)
from .heuristics import FitTolerances, PipelineConfig, run_pipeline
from .ingest import load_raw_curve, rolling_average, to_trace
from .metrics import NvmMetrics, extract_metrics, split_branches
from .model import ModelParams, SweepSpec, simulate_sweep
from .plotting import save_fit_figure, save_trace_figure
from .traceio import (read_trace, sniff_header, write_atomic, write_raw_curve,
                      write_trace)

__all__ = ["cli_main", "main", "build_parser", "CliConfig"]

CONFIG_ENV_VAR = "RRAMFIT_CONFIG"

SWEEP_OVERRIDES = ("v_max", "v_min", "ramp_rate", "dt", "i_compliance",
                   "t_ox", "polarity_order")


@dataclass(frozen=True)
class CliConfig:
    """Resolved run configuration shared by the fitting subcommands."""

    seed: int = 0
    workers: int = 1
    expansion: bool = False
    k_neighbors: int = DEFAULT_NEIGHBORS
    connector: tuple = ()           # external estimator argv; empty = k-NN
    pipeline: PipelineConfig = PipelineConfig()


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SchemaViolation(f"cannot read {what} {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{what} {path} is not valid JSON: {exc}") \
            from None


def _write_json(payload, path):
    write_atomic(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _print_json(payload, path=None):
    if path:
        _write_json(payload, path)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


# ---------------------------------------------------------------------------
# argument plumbing

def _add_sweep_args(p, with_device=True):
    g = p.add_argument_group("sweep overrides")
    if with_device:
        g.add_argument("--device", choices=sorted(BENCHMARK_DEVICES),
                       help="start from this benchmark device's sweep")
    g.add_argument("--sweep", metavar="FILE",
                   help="sweep spec JSON (same fields as the trace header)")
    g.add_argument("--v-max", type=float, dest="v_max")
    g.add_argument("--v-min", type=float, dest="v_min")
    g.add_argument("--ramp-rate", type=float, dest="ramp_rate")
    g.add_argument("--dt", type=float)
    g.add_argument("--compliance", type=float, dest="i_compliance")
    g.add_argument("--t-ox", type=float, dest="t_ox",
                   help="oxide thickness in metres")
    g.add_argument("--sweep-order", dest="polarity_order",
                   choices=("positive-first", "negative-first"),
                   help="four-segment order of the sweep")


def _resolve_sweep(args, base=None):
    if getattr(args, "sweep", None):
        base = SweepSpec.from_dict(_read_json(args.sweep, "sweep spec"))
    elif getattr(args, "device", None):
        base = get_device(args.device).sweep
    elif base is None:
        base = SweepSpec()
    overrides = {k: getattr(args, k) for k in SWEEP_OVERRIDES
                 if getattr(args, k, None) is not None}
    return replace(base, **overrides) if overrides else base


def _add_estimator_args(p):
    g = p.add_argument_group("estimator")
    g.add_argument("--dataset", metavar="FILE",
                   help="records JSON-lines file for the k-NN estimator")
    g.add_argument("--moments", metavar="FILE",
                   help="stats sidecar with signature moments "
                        "(default: <dataset>.stats.json when present)")
    g.add_argument("-k", "--neighbors", type=int, default=DEFAULT_NEIGHBORS)
    g.add_argument("--connector", metavar="CMD",
                   help="external estimator command; gets one request JSON "
                        "on stdin, must answer one response JSON on stdout")
    g.add_argument("--connector-timeout", type=float, default=120.0)


def _build_estimator(args):
    if args.connector:
        return ExternalEstimator(shlex.split(args.connector),
                                 timeout_s=args.connector_timeout)
    if not args.dataset:
        raise SchemaViolation("need --dataset (or --connector) to estimate")
    records = load_dataset(args.dataset)
    moments = None
    sidecar = args.moments or args.dataset + ".stats.json"
    if args.moments or os.path.exists(sidecar):
        stats = _read_json(sidecar, "stats sidecar")
        moments = stats.get("signature", stats if "mean" in stats else None)
        if moments is None:
            raise SchemaViolation(f"{sidecar} carries no signature moments")
    return NearestNeighborEstimator(records, k=args.neighbors,
                                    moments=moments)


def _reference_metrics(args, trace, sweep):
    """Reference metrics: explicit JSON, or extraction from the trace.

    CSV traces carry no compliance limit, so extraction runs under the
    resolved sweep's limit (matching the pipeline's own simulations)
    unless --compliance overrides it.
    """
    if getattr(args, "ref_metrics", None):
        payload = _read_json(args.ref_metrics, "reference metrics")
        try:
            return NvmMetrics.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad reference metrics: {exc}") from None
    if trace is None:
        raise SchemaViolation("need a trace CSV or a reference-metrics JSON")
    compliance = getattr(args, "i_compliance", None)
    if compliance is None:
        compliance = sweep.i_compliance
    return extract_metrics(trace, i_compliance=compliance)


def _load_trace(args):
    """Read a trace CSV; a bare v,i file is ingested as a digitized curve."""
    path = args.trace
    if sniff_header(path) == ("v", "i"):
        curve = load_raw_curve(path)
        window = getattr(args, "smooth", 0) or 0
        if window > 1:
            curve = rolling_average(curve, window)
        return to_trace(curve, order=getattr(args, "polarity_order", None))
    return read_trace(path)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args):
    if args.params:
        params = ModelParams.from_dict(_read_json(args.params, "params"))
    elif args.device:
        params = get_device(args.device).params
    else:
        raise SchemaViolation("need --params FILE or --device NAME")
    sweep = _resolve_sweep(args)
    trace = simulate_sweep(params, sweep)
    write_trace(trace, args.output)
    if args.figure:
        save_trace_figure(trace, args.figure, title=args.device or "simulate")
    return 0


def _cmd_metrics(args):
    trace = _load_trace(args)
    metrics = extract_metrics(trace, i_compliance=args.i_compliance)
    _print_json(metrics.to_dict(), args.output)
    return 0


def _cmd_gen_dataset(args):
    ranges = None
    if args.ranges:
        payload = _read_json(args.ranges, "ranges")
        try:
            ranges = {k: (float(v[0]), float(v[1]), str(v[2]))
                      for k, v in payload.items()}
        except (TypeError, IndexError, ValueError) as exc:
            raise SchemaViolation(
                f"ranges must map name -> [lo, hi, scale]: {exc}") from None
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    traces_dir = None
    if args.keep_traces:
        traces_dir = outdir / "traces"
        traces_dir.mkdir(exist_ok=True)
    sweep = _resolve_sweep(args)
    records, stats = generate_dataset(
        args.n_target, seed=args.seed, sweep=sweep, ranges=ranges,
        n_workers=args.workers, traces_dir=traces_dir)
    stats.pop("elapsed_s", None)   # keep the sidecar byte-reproducible
    records_path = outdir / "records.jsonl"
    write_dataset(records, records_path, stats=stats)
    print(f"{len(records)} records from {stats['draws_evaluated']} draws "
          f"(yield {stats['yield']:.2f}) -> {records_path}")
    return 0


def _cmd_estimate(args):
    if args.metrics:
        payload = _read_json(args.metrics, "metrics")
        try:
            metrics = NvmMetrics.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad metrics JSON: {exc}") from None
        trace_path = None
    elif args.trace:
        trace = _load_trace(args)
        metrics = extract_metrics(trace, i_compliance=args.i_compliance)
        trace_path = args.trace
    else:
        raise SchemaViolation("need --metrics FILE or --trace FILE")
    estimator = _build_estimator(args)
    if isinstance(estimator, ExternalEstimator):
        result = estimator.estimate(metrics, args.t_ox, trace_path=trace_path)
    else:
        result = estimator.estimate(metrics, args.t_ox)
    _print_json(_response_payload(result), args.output)
    return 0


def _response_payload(result: EstimateResult):
    return build_response(result.params, result.source,
                          neighbor_ids=result.neighbor_ids,
                          confidence=result.confidence,
                          diagnostics=result.diagnostics or None)


def _pipeline_config(args):
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    raw = _read_json(path, "config") if path else {}
    if not isinstance(raw, dict):
        raise SchemaViolation("config must be a JSON object")
    known = {"tolerances", "max_iter", "max_loops", "expansion",
             "k_neighbors", "sweep"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaViolation(f"unknown config keys: {sorted(unknown)}")
    kw = {}
    if "tolerances" in raw:
        kw["tolerances"] = FitTolerances(**raw["tolerances"])
    for key in ("max_iter", "max_loops"):
        if key in raw:
            kw[key] = int(raw[key])
    expansion = bool(raw.get("expansion", False)) or args.expand_bounds
    cfg = PipelineConfig(expansion=expansion, **kw)
    if "k_neighbors" in raw and args.neighbors == DEFAULT_NEIGHBORS:
        args.neighbors = int(raw["k_neighbors"])
    return cfg, raw.get("sweep")


def _cmd_fit(args):
    cfg, sweep_over = _pipeline_config(args)
    ref_trace = None
    if not getattr(args, "ref_metrics", None) and getattr(args, "trace",
                                                          None):
        ref_trace = _load_trace(args)
    base = None
    if ref_trace is not None and ref_trace.sweep is not None:
        base = ref_trace.sweep
    sweep = _resolve_sweep(args, base=base)
    if sweep_over:
        sweep = replace(sweep, **{k: v for k, v in sweep_over.items()
                                  if k in SWEEP_OVERRIDES})
    ref = _reference_metrics(args, ref_trace, sweep)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    if args.init_params:
        params = ModelParams.from_dict(_read_json(args.init_params,
                                                  "initial params"))
        result = EstimateResult(params=params, source="file")
    else:
        estimator = _build_estimator(args)
        if isinstance(estimator, ExternalEstimator):
            result = estimator.estimate(ref, sweep.t_ox,
                                        trace_path=args.trace)
        else:
            result = estimator.estimate(ref, sweep.t_ox)
    _write_json(_response_payload(result), outdir / "estimate.json")

    try:
        report = run_pipeline(ref, sweep, result.params, cfg)
    except PipelineError as exc:
        if exc.report is not None:
            _write_json(exc.report.to_dict(), outdir / "report.json")
        raise
    _write_json(report.params.to_dict(), outdir / "params.json")
    _write_json(report.to_dict(), outdir / "report.json")

    stage_traces = {}
    for idx, stage in enumerate(report.stages):
        trace = simulate_sweep(stage.params, sweep)
        write_trace(trace, outdir / f"stage-{idx}-{stage.name}.csv")
        stage_traces[stage.name] = trace
    final = {"estimate": stage_traces[report.stages[0].name],
             "fitted": stage_traces[report.stages[-1].name]}
    save_fit_figure(ref_trace, final, outdir / "fit.png", metrics=ref,
                    title=f"converged={report.converged} "
                          f"loops={report.loops} sims={report.simulations}")
    print(f"converged={report.converged} reloops={report.reloops} "
          f"sims={report.simulations} -> {outdir}")
    return 0


def _cmd_plot_data(args):
    trace = _load_trace(args)
    split = split_branches(trace)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = args.stem
    branches = {}
    for name in ("pos_forward", "pos_return", "neg_forward", "neg_return"):
        branch = getattr(split, name)
        fname = f"{stem}-{name.replace('_', '-')}.csv"
        write_raw_curve(branch.v, branch.i, outdir / fname)
        branches[name] = {"path": fname, "points": len(branch.v),
                          "v_min": float(branch.v[0]),
                          "v_max": float(branch.v[-1])}
    try:
        metrics = extract_metrics(trace, i_compliance=args.i_compliance)
        metrics_payload = metrics.to_dict()
    except RramFitError:
        metrics, metrics_payload = None, None
    figure = f"{stem}.png"
    save_trace_figure(trace, outdir / figure, metrics=metrics, title=stem)
    manifest = {"source": str(args.trace), "points": len(trace),
                "branches": branches, "metrics": metrics_payload,
                "figure": figure}
    _write_json(manifest, outdir / f"{stem}-manifest.json")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="rramfit",
        description="Bipolar resistive-switching sweep simulation and "
                    "automatic parameter extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate one triangular sweep")
    p.add_argument("--params", metavar="FILE",
                   help="model params JSON {i0, g0, v0_volt, nu0, beta, "
                        "gamma0}")
    p.add_argument("-o", "--output", required=True, metavar="FILE.csv")
    p.add_argument("--figure", metavar="FILE.png")
    _add_sweep_args(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("metrics", help="extract switching metrics from a "
                                       "trace or digitized curve")
    p.add_argument("trace", metavar="TRACE.csv")
    p.add_argument("-o", "--output", metavar="FILE.json",
                   help="default: print to stdout")
    p.add_argument("--compliance", type=float, dest="i_compliance")
    p.add_argument("--smooth", type=int, default=0, metavar="W",
                   help="odd rolling-average window for v,i curves")
    p.add_argument("--sweep-order", dest="polarity_order",
                   choices=("positive-first", "negative-first"))
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("gen-dataset", help="generate the synthetic "
                                           "parameter-sweep dataset")
    p.add_argument("--n-target", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ranges", metavar="FILE",
                   help="JSON {name: [lo, hi, linear|log]}")
    p.add_argument("--outdir", required=True)
    p.add_argument("--keep-traces", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    _add_sweep_args(p, with_device=False)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("estimate", help="initial parameter estimate for "
                                        "measured metrics")
    p.add_argument("--metrics", metavar="FILE.json")
    p.add_argument("--trace", metavar="TRACE.csv")
    p.add_argument("--t-ox", type=float, required=True, dest="t_ox",
                   help="oxide thickness in metres")
    p.add_argument("--compliance", type=float, dest="i_compliance")
    p.add_argument("--smooth", type=int, default=0)
    p.add_argument("--sweep-order", dest="polarity_order",
                   choices=("positive-first", "negative-first"))
    p.add_argument("-o", "--output", metavar="FILE.json")
    _add_estimator_args(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fit", help="full pipeline: estimate, then the three "
                                   "matching blocks")
    p.add_argument("--trace", metavar="TRACE.csv",
                   help="reference sweep (optional when --ref-metrics "
                        "carries all five metrics)")
    p.add_argument("--ref-metrics", metavar="FILE.json")
    p.add_argument("--init-params", metavar="FILE.json",
                   help="skip estimation and start from these params")
    p.add_argument("--config", metavar="FILE.json",
                   help=f"pipeline config (default: ${CONFIG_ENV_VAR})")
    p.add_argument("--expand-bounds", action="store_true",
                   help="allow searches to widen beyond the default bounds")
    p.add_argument("--smooth", type=int, default=0)
    p.add_argument("--outdir", required=True)
    _add_estimator_args(p)
    _add_sweep_args(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("plot-data", help="per-branch CSVs, manifest and "
                                         "overview figure for one trace")
    p.add_argument("trace", metavar="TRACE.csv")
    p.add_argument("--outdir", required=True)
    p.add_argument("--stem", default="trace")
    p.add_argument("--compliance", type=float, dest="i_compliance")
    p.add_argument("--smooth", type=int, default=0)
    p.add_argument("--sweep-order", dest="polarity_order",
                   choices=("positive-first", "negative-first"))
    p.set_defaults(func=_cmd_plot_data)
    return parser


def cli_main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except RramFitError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        payload.update({k: v for k, v in exc.context().items()
                        if v is not None})
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 1


main = cli_main


if __name__ == "__main__":
    sys.exit(cli_main())
