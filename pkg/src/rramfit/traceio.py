"""Trace and raw-curve CSV files.

Trace files carry the header ``t,v,i`` or ``t,v,i,g``; raw digitized curves
carry ``v,i``.  Floats are written with shortest round-trip repr so a
write/read cycle reproduces the arrays exactly.  Parsing is strict: a bad
header, a short row, or an unparsable number raises TraceFormatError with the
offending line number.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import TraceFormatError
from .model import IVTrace

TRACE_HEADER = ("t", "v", "i")
TRACE_HEADER_G = ("t", "v", "i", "g")
RAW_HEADER = ("v", "i")


def write_atomic(path, data):
    """Write text or bytes to path via a temp file + rename."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_to_csv(trace):
    """Render a trace as CSV text (full double precision)."""
    buf = io.StringIO()
    has_g = trace.g is not None
    buf.write(",".join(TRACE_HEADER_G if has_g else TRACE_HEADER) + "\n")
    cols = (trace.t, trace.v, trace.i) + ((trace.g,) if has_g else ())
    for row in zip(*cols):
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    return buf.getvalue()


def write_trace(trace, path):
    write_atomic(path, trace_to_csv(trace))


def _parse_rows(path, expected_headers):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}", path=path)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty file", path=path, line=1) from None
    header = tuple(h.strip().lower() for h in header)
    if header not in expected_headers:
        options = " or ".join(",".join(h) for h in expected_headers)
        raise TraceFormatError(
            f"header {','.join(header)!r} does not match {options}",
            path=path, line=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TraceFormatError(
                f"expected {len(header)} fields, got {len(row)}",
                path=path, line=lineno)
        try:
            rows.append([float(c) for c in row])
        except ValueError as exc:
            raise TraceFormatError(str(exc), path=path, line=lineno) from None
    if not rows:
        raise TraceFormatError("no data rows", path=path, line=2)
    return header, np.asarray(rows, dtype=float)


def read_trace(path):
    """Parse a t,v,i[,g] trace CSV into an IVTrace (no sweep metadata)."""
    header, data = _parse_rows(path, (TRACE_HEADER, TRACE_HEADER_G))
    g = data[:, 3] if len(header) == 4 else None
    return IVTrace(t=data[:, 0], v=data[:, 1], i=data[:, 2], g=g)


def sniff_header(path):
    """Return the lowercased header tuple of a CSV file."""
    try:
        with open(path, newline="") as fh:
            row = next(csv.reader(fh), None)
    except OSError as exc:
        raise TraceFormatError(f"cannot read {path}: {exc}", path=path)
    if row is None:
        raise TraceFormatError("empty file", path=path, line=1)
    return tuple(h.strip().lower() for h in row)


def read_raw_curve(path):
    """Parse a v,i digitized-curve CSV into (v, i) arrays in file order."""
    _, data = _parse_rows(path, (RAW_HEADER,))
    return data[:, 0], data[:, 1]


def write_raw_curve(v, i, path):
    buf = io.StringIO()
    buf.write(",".join(RAW_HEADER) + "\n")
    for row in zip(v, i):
        buf.write(",".join(repr(float(x)) for x in row) + "\n")
    write_atomic(path, buf.getvalue())
