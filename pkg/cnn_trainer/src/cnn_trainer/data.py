"""Rendered-dataset construction from the fitting toolkit's file formats.

Inputs are the documented external formats only: the records JSON-lines
file (params, t_ox, trace_path per line), the stats sidecar (sampling
ranges), and per-record trace CSVs (t,v,i[,g] header). Output is one
directory holding rendered.npz, scalers.json and style.json.
"""

import csv
import json
import os
from pathlib import Path

import numpy as np

from .errors import DatasetTooSmall, SchemaViolation, TraceFormatError
from .render import IMAGE_SIZE, STYLE, render_curve
from .scalers import (normalize_labels, scalers_from_dict,
                      scalers_from_ranges, scalers_to_dict)

MIN_SAMPLES = 500


def read_trace_csv(path):
    """(v, i) columns of a trace CSV."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip().lower() for h in next(reader)]
            except StopIteration:
                raise TraceFormatError(f"{path}: empty file") from None
            try:
                vi = header.index("v"), header.index("i")
            except ValueError:
                raise TraceFormatError(
                    f"{path}: header {','.join(header)!r} has no v,i"
                ) from None
            v, i = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    v.append(float(row[vi[0]]))
                    i.append(float(row[vi[1]]))
                except (IndexError, ValueError) as exc:
                    raise TraceFormatError(
                        f"{path}:{lineno}: {exc}") from None
    except OSError as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}") from None
    if len(v) < 2:
        raise TraceFormatError(f"{path}: fewer than 2 samples")
    return np.asarray(v), np.asarray(i)


def _load_records(records_path):
    records = []
    with open(records_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaViolation(
                    f"{records_path}:{lineno}: not valid JSON ({exc})"
                ) from None
    if not records:
        raise DatasetTooSmall(f"no records in {records_path}")
    return records


def build_rendered_dataset(records_path, out_dir, stats_path=None,
                           limit=None, progress=None):
    """Render every record's trace and write the training directory.

    Records must carry trace_path entries (generate the source dataset
    with trace retention enabled). Returns the number of samples.
    """
    records_path = Path(records_path)
    stats_path = Path(stats_path) if stats_path \
        else records_path.with_name(records_path.name + ".stats.json")
    try:
        stats = json.loads(stats_path.read_text())
        ranges = stats["ranges"]
    except OSError as exc:
        raise SchemaViolation(f"cannot read stats sidecar: {exc}") from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise SchemaViolation(f"bad stats sidecar: {exc}") from None
    scalers = scalers_from_ranges(ranges)

    records = _load_records(records_path)
    if limit is not None:
        records = records[:limit]

    images = np.empty((len(records), IMAGE_SIZE, IMAGE_SIZE, 3),
                      dtype=np.uint8)
    labels = np.empty((len(records), 5), dtype=np.float32)
    t_ox_nm = np.empty(len(records), dtype=np.float64)
    record_ids = []
    for k, rec in enumerate(records):
        try:
            trace_path = rec["trace_path"]
            params = rec["params"]
            t_ox = float(rec["t_ox"])
            record_ids.append(str(rec["record_id"]))
        except (KeyError, TypeError) as exc:
            raise SchemaViolation(
                f"record {k}: missing field ({exc}); regenerate the "
                "dataset with trace retention") from None
        if not os.path.isabs(trace_path):
            trace_path = records_path.parent / trace_path
        v, i = read_trace_csv(trace_path)
        images[k] = render_curve(v, i)
        labels[k] = normalize_labels(params, scalers)
        t_ox_nm[k] = t_ox * 1e9
        if progress is not None:
            progress(k + 1, len(records))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(out_dir / "rendered.npz", images=images,
                        labels=labels, t_ox_nm=t_ox_nm,
                        record_ids=np.array(record_ids))
    (out_dir / "scalers.json").write_text(
        json.dumps(scalers_to_dict(scalers), indent=2, sort_keys=True)
        + "\n")
    (out_dir / "style.json").write_text(
        json.dumps(STYLE, indent=2, sort_keys=True) + "\n")
    return len(records)


def load_rendered_dataset(data_dir):
    """dict with images, labels, t_ox_nm, record_ids, scalers, style."""
    data_dir = Path(data_dir)
    try:
        with np.load(data_dir / "rendered.npz") as z:
            out = {k: z[k] for k in ("images", "labels", "t_ox_nm",
                                     "record_ids")}
        out["scalers"] = scalers_from_dict(
            json.loads((data_dir / "scalers.json").read_text()))
        out["style"] = json.loads((data_dir / "style.json").read_text())
    except OSError as exc:
        raise SchemaViolation(f"cannot load dataset dir: {exc}") from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise SchemaViolation(f"bad dataset dir: {exc}") from None
    n = len(out["images"])
    if not (len(out["labels"]) == len(out["t_ox_nm"])
            == len(out["record_ids"]) == n):
        raise SchemaViolation("dataset arrays disagree on length")
    if out["images"].shape[1:] != (IMAGE_SIZE, IMAGE_SIZE, 3) \
            or out["images"].dtype != np.uint8:
        raise SchemaViolation("images must be uint8 of the locked size")
    return out
