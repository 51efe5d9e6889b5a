"""
canopy/bench/figures.py

Static SVG scatter plots. Output is byte-identical for identical input:
fixed figure size, fixed hash salt for element ids, no date metadata.
"""

from __future__ import annotations

from io import StringIO
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from soil.errors import ValidationError  # noqa: E402

PAD_FRACTION = 0.05
_MARKERS = ["o", "s", "^", "D", "v", "P", "X", "*"]


def padded_range(values: np.ndarray) -> tuple[float, float]:
    """Data min/max padded by 5% of the span (or ±0.5 for a single value)."""
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    if span == 0:
        return lo - 0.5, hi + 0.5
    return lo - PAD_FRACTION * span, hi + PAD_FRACTION * span


def emit_svg_scatter(
    points: np.ndarray,
    labels: Sequence | None = None,
    axes: tuple[str, str] = ("x", "y"),
    title: str | None = None,
    path: str | Path | None = None,
) -> str:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] != 2:
        raise ValidationError(f"emit_svg_scatter needs a nonempty n×2 array, got {points.shape}.")
    labels = np.zeros(points.shape[0], dtype=np.int64) if labels is None else np.asarray(labels)
    if labels.shape[0] != points.shape[0]:
        raise ValidationError("emit_svg_scatter: one label per point is required.")

    with matplotlib.rc_context({"svg.hashsalt": "entropy-garden", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        classes = sorted(set(labels.tolist()), key=str)
        for c, cls in enumerate(classes):
            mask = labels == cls
            ax.scatter(points[mask, 0], points[mask, 1], s=12,
                       marker=_MARKERS[c % len(_MARKERS)],
                       label=str(cls) if len(classes) > 1 else None)
        ax.set_xlim(*padded_range(points[:, 0]))
        ax.set_ylim(*padded_range(points[:, 1]))
        ax.set_xlabel(axes[0])
        ax.set_ylabel(axes[1])
        if title:
            ax.set_title(title)
        if len(classes) > 1:
            ax.legend(loc="best", fontsize="small")

        buffer = StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)

    svg = buffer.getvalue()
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(svg)
    return svg
