"""Exact hulls, 3-D maxima and point-set metrics with counted operations."""

from .hulls import (
    HullResult,
    canonical_vertices,
    chans_hull,
    hull_area,
    hull_error_pct,
    hull_of_points,
    monotone_chain_hull,
    partition_merge_hull,
)
from .maxima import MaximaResult, adaptive_maxima, maxima_3d, maxima_f1
from .metrics import chamfer, chamfer_with_grad, hausdorff
from .predicates import OpCounter, counted_sort, orient

__all__ = [
    "HullResult", "MaximaResult", "OpCounter",
    "monotone_chain_hull", "chans_hull", "partition_merge_hull", "hull_of_points",
    "hull_area", "hull_error_pct", "canonical_vertices",
    "maxima_3d", "adaptive_maxima", "maxima_f1",
    "hausdorff", "chamfer", "chamfer_with_grad",
    "orient", "counted_sort",
]
