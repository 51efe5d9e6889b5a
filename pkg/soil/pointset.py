"""
soil/pointset.py

The ground every primitive grows from: validated, immutable point sets and
hard partitions of them.

A PointSet wraps a read-only (n, d) float64 array. Construction is the only
place coordinates are checked; downstream code trusts the invariants
(n ≥ 1, d ≥ 1, every coordinate finite).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


# ═══════════════════════════════════════════════════════════════════════════════
# POINT SETS
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class PointSet:
    """A finite, ordered set of d-dimensional points."""
    points: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if arr.size else arr.reshape(0, 1)
        if arr.ndim != 2:
            raise ValidationError(
                f"Point set must be a 2-D array of shape (n, d), got ndim={arr.ndim}."
            )
        if arr.shape[0] < 1:
            raise ValidationError("Point set is empty: at least one point is required.")
        if arr.shape[1] < 1:
            raise ValidationError("Point set has dimension 0: at least one coordinate is required.")
        bad = ~np.isfinite(arr)
        if bad.any():
            row = int(np.argwhere(bad)[0][0])
            raise ValidationError(
                f"Point set contains non-finite coordinates (first at row {row}: "
                f"{arr[row].tolist()})."
            )
        object.__setattr__(self, "points", _frozen(arr.copy()))

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[float]]) -> "PointSet":
        rows = [list(r) for r in rows]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise ValidationError(f"Ragged point rows: found widths {sorted(widths)}.")
        return cls(np.array(rows, dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def __len__(self) -> int:
        return self.n

    def require_dim(self, *allowed: int, op: str = "operation") -> None:
        if self.d not in allowed:
            raise ValidationError(
                f"{op} requires d in {list(allowed)}, got d={self.d}."
            )

    def translated(self, displacement: np.ndarray) -> "PointSet":
        return PointSet(self.points + np.asarray(displacement, dtype=np.float64))

    def take(self, indices: Sequence[int] | np.ndarray) -> "PointSet":
        return PointSet(self.points[np.asarray(indices, dtype=np.int64)])

    def diameter_bound(self) -> float:
        """Length of the bounding-box diagonal (an upper bound on the diameter)."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.sqrt(np.dot(span, span)))


# ═══════════════════════════════════════════════════════════════════════════════
# HARD PARTITIONS
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HardPartition:
    """Discrete labeling of a point set; labels are dense 0..K-1, every part non-empty."""
    labels: np.ndarray
    part_sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1 or raw.size == 0:
            raise ValidationError("Partition labels must be a non-empty 1-D sequence.")
        # Dense relabel in order of sorted original label value.
        _, dense = np.unique(raw, return_inverse=True)
        dense = dense.astype(np.int64).reshape(-1)
        sizes = np.bincount(dense)
        object.__setattr__(self, "labels", _frozen(dense))
        object.__setattr__(self, "part_sizes", _frozen(sizes.astype(np.int64)))

    @classmethod
    def single(cls, n: int) -> "HardPartition":
        return cls(np.zeros(n, dtype=np.int64))

    @classmethod
    def from_parts(cls, parts: Sequence[Sequence[int]], n: int) -> "HardPartition":
        labels = np.full(n, -1, dtype=np.int64)
        for j, part in enumerate(parts):
            if len(part) == 0:
                raise ValidationError(f"Part {j} is empty.")
            for i in part:
                if labels[i] != -1:
                    raise ValidationError(f"Point {i} appears in more than one part.")
                labels[i] = j
        if (labels < 0).any():
            missing = np.flatnonzero(labels < 0).tolist()
            raise ValidationError(f"Parts do not cover points {missing}.")
        return cls(labels)

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def k(self) -> int:
        return int(self.part_sizes.shape[0])

    @property
    def masses(self) -> np.ndarray:
        return self.part_sizes / float(self.n)

    def parts(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.cumsum(self.part_sizes)[:-1]
        return np.split(order, bounds)

    def check_covers(self, S: PointSet) -> None:
        if self.n != S.n:
            raise ValidationError(
                f"Partition labels cover {self.n} points but the point set has {S.n}."
            )

    def encoding(self) -> tuple[int, ...]:
        """Canonical encoding: labels renumbered by first appearance."""
        seen: dict[int, int] = {}
        out = []
        for lab in self.labels.tolist():
            if lab not in seen:
                seen[lab] = len(seen)
            out.append(seen[lab])
        return tuple(out)
