"""Deterministic rasterization of I-V curves into fixed-size RGB images.

The raster is the network's whole view of the device, so the style is a
versioned contract: training data and prediction inputs must come from
the same style version or the comparison is meaningless. Bump
STYLE_VERSION whenever anything below changes.
"""

import os

import numpy as np

if os.environ.get("MPLBACKEND") is None:
    import matplotlib
    matplotlib.use("Agg")

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .errors import TraceFormatError

STYLE_VERSION = "iv-raster/1"
IMAGE_SIZE = 224

# One black curve on white, no axes, ticks, text or grid; x limits pinned
# to the sweep's voltage extremes, y left to the default autoscale (the
# raster deliberately destroys the current scale; i0 is not a label).
STYLE = {
    "version": STYLE_VERSION,
    "size_px": IMAGE_SIZE,
    "dpi": 100,
    "color": "black",
    "linewidth": 1.2,
}


def render_curve(v, i, style=None) -> np.ndarray:
    """(224, 224, 3) uint8 raster of one sweep; bit-identical per input."""
    style = style or STYLE
    v = np.asarray(v, dtype=float)
    i = np.asarray(i, dtype=float)
    if v.ndim != 1 or v.shape != i.shape or len(v) < 2:
        raise TraceFormatError("need matching 1-d v and i with >= 2 points")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(i))):
        raise TraceFormatError("curve samples must be finite")

    px = style["size_px"]
    dpi = style["dpi"]
    fig = Figure(figsize=(px / dpi, px / dpi), dpi=dpi)
    canvas = FigureCanvasAgg(fig)
    ax = fig.add_axes((0.0, 0.0, 1.0, 1.0))
    ax.plot(v, i, color=style["color"], linewidth=style["linewidth"])
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    ax.set_xlim(lo, hi)
    ax.axis("off")
    canvas.draw()
    img = np.asarray(canvas.buffer_rgba())[:, :, :3].copy()
    if img.shape != (px, px, 3):
        raise TraceFormatError(f"render produced {img.shape}, "
                               f"expected ({px}, {px}, 3)")
    return img


def curve_pixel_columns(image: np.ndarray) -> np.ndarray:
    """Boolean mask of image columns touched by non-background pixels."""
    return (image < 128).any(axis=2).any(axis=0)
