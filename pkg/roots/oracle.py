"""
roots/oracle.py

Exact range-partition entropy on small 2-D instances.

The entropy of a partition P of n points is sum_parts |P| log(n / |P|)
(normalized: divided by n). With halfspace ranges the unqualified minimum is
the one-part partition (entropy 0), so the searches here are non-trivial
variants: a minimum over realizable partitions with at least `parts_min`
parts, and a minimum over arrangements of m lines that each split S.

Subsets are point-index bitmasks (bit i ↔ point i).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from shapely.geometry import MultiPoint

from soil.errors import SizeGuardError, ValidationError
from soil.pointset import HardPartition, PointSet

logger = logging.getLogger("roots.oracle")

MAX_REALIZABLE_N = 20
MAX_PARTITION_N = 15
MAX_ARRANGEMENT_N = 64
MAX_ARRANGEMENT_M = 3


def _guard(value: int, limit: int, what: str) -> None:
    if value > limit:
        logger.error(f"size guard tripped: {what}={value} > {limit}")
        raise SizeGuardError(
            f"{what}={value} exceeds the exhaustive-search guard of {limit}.\n"
            f"  Use a smaller instance or a surrogate estimator instead.",
            limit=limit, actual=value,
        )


# ═══════════════════════════════════════════════════════════════════════════════
# RESULT TYPES
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class RealizableSubsetIndex:
    subsets: list[int]
    n: int

    def __contains__(self, mask: int) -> bool:
        return mask in set(self.subsets)

    def members(self, mask: int) -> list[int]:
        return [i for i in range(self.n) if mask >> i & 1]


@dataclass(frozen=True)
class OraclePartitionResult:
    partition: HardPartition
    entropy_unnormalized: float
    entropy_normalized: float
    lines: list[list] | None = None  # [[w_x, w_y], b] per line

    def to_dict(self) -> dict:
        payload = {
            "entropy_nats": self.entropy_unnormalized,
            "entropy_normalized": self.entropy_normalized,
            "partition": self.partition.labels.tolist(),
        }
        if self.lines is not None:
            payload["lines"] = self.lines
        return payload


# ═══════════════════════════════════════════════════════════════════════════════
# PARTITION ENTROPY
# ═══════════════════════════════════════════════════════════════════════════════

def sizes_entropy(sizes: Sequence[int], n: int) -> float:
    """sum_s s log(n/s) in ascending-size summation order."""
    total = 0.0
    for s in sorted(int(s) for s in sizes):
        if s < 0:
            raise ValidationError(f"Part size must be non-negative, got {s}.")
        if s:
            total += s * math.log(n / s)
    return total


def partition_entropy(P: HardPartition) -> OraclePartitionResult:
    if (P.part_sizes <= 0).any():
        raise ValidationError("Partition has an empty part.")
    unnormalized = sizes_entropy(P.part_sizes.tolist(), P.n)
    return OraclePartitionResult(P, unnormalized, unnormalized / P.n)


def generating_partition_entropy(labels: Sequence[int] | np.ndarray) -> OraclePartitionResult:
    return partition_entropy(HardPartition(np.asarray(labels)))


# ═══════════════════════════════════════════════════════════════════════════════
# REALIZABLE SUBSETS
# ═══════════════════════════════════════════════════════════════════════════════

def _critical_directions(X: np.ndarray) -> np.ndarray:
    """Unit directions at the midpoints of the arcs between critical angles."""
    angles = set()
    n = X.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            dx, dy = X[j] - X[i]
            if dx == 0 and dy == 0:
                continue
            base = math.atan2(dy, dx) + math.pi / 2
            angles.add(base % (2 * math.pi))
            angles.add((base + math.pi) % (2 * math.pi))
    if not angles:
        return np.array([[1.0, 0.0]])
    ordered = sorted(angles)
    mids = []
    for a, b in zip(ordered, ordered[1:] + [ordered[0] + 2 * math.pi]):
        mid = 0.5 * (a + b)
        mids.append((math.cos(mid), math.sin(mid)))
    return np.array(mids)


def _strictly_separable(X: np.ndarray, mask: int, n: int) -> bool:
    inside = [X[i] for i in range(n) if mask >> i & 1]
    outside = [X[i] for i in range(n) if not mask >> i & 1]
    hull_in = MultiPoint([tuple(p) for p in inside]).convex_hull
    hull_out = MultiPoint([tuple(p) for p in outside]).convex_hull
    return not hull_in.intersects(hull_out)


def realizable_subsets_2d(S: PointSet) -> RealizableSubsetIndex:
    """All nonempty proper subsets strictly separable from their complement by a line.

    Candidates are the prefixes of the projection orders along one direction
    per arc between critical angles; each candidate is then confirmed by
    convex-hull disjointness.
    """
    S.require_dim(2, op="realizable_subsets_2d")
    _guard(S.n, MAX_REALIZABLE_N, "n")
    X = S.points
    n = S.n
    full = (1 << n) - 1

    candidates: set[int] = set()
    for u in _critical_directions(X):
        proj = X @ u
        order = np.argsort(proj, kind="stable")
        mask = 0
        for pos in range(n - 1):
            mask |= 1 << int(order[pos])
            if proj[order[pos]] < proj[order[pos + 1]]:
                candidates.add(mask)

    subsets = sorted(m for m in candidates if 0 < m < full and _strictly_separable(X, m, n))
    return RealizableSubsetIndex(subsets=subsets, n=n)


# ═══════════════════════════════════════════════════════════════════════════════
# MINIMUM-ENTROPY PARTITION (bitmask DP)
# ═══════════════════════════════════════════════════════════════════════════════

def _labels_from_masks(masks: Sequence[int], n: int) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    for j, mask in enumerate(sorted(masks, key=lambda m: (m & -m))):
        for i in range(n):
            if mask >> i & 1:
                labels[i] = j
    return labels


def min_entropy_partition(S: PointSet, parts_min: int = 2) -> OraclePartitionResult:
    S.require_dim(2, op="min_entropy_partition")
    _guard(S.n, MAX_PARTITION_N, "n")
    if parts_min < 2:
        raise ValidationError(f"parts_min must be ≥ 2, got {parts_min}.")
    n = S.n
    index = realizable_subsets_2d(S)
    masks = np.array(index.subsets, dtype=np.int64)
    costs = {int(m): sizes_entropy([int(m).bit_count()], n) for m in index.subsets}

    @lru_cache(maxsize=None)
    def best(mask: int, need: int) -> tuple[float, tuple[int, ...]]:
        if mask == 0:
            return (0.0, ()) if need == 0 else (math.inf, ())
        low = mask & -mask
        fits = masks[((masks & ~mask) == 0) & ((masks & low) != 0)]
        result: tuple[float, tuple[int, ...]] = (math.inf, ())
        for part in fits.tolist():
            rest_cost, rest_parts = best(mask ^ part, max(0, need - 1))
            total = costs[part] + rest_cost
            if total < result[0] - 1e-12:
                result = (total, (part,) + rest_parts)
        return result

    value, parts = best((1 << n) - 1, parts_min)
    best.cache_clear()
    if not math.isfinite(value):
        raise ValidationError(
            f"no realizable cover: no partition into ≥ {parts_min} linearly separable parts exists."
        )
    return partition_entropy(HardPartition(_labels_from_masks(parts, n)))


# ═══════════════════════════════════════════════════════════════════════════════
# MINIMUM-ENTROPY LINE ARRANGEMENT
# ═══════════════════════════════════════════════════════════════════════════════

def _candidate_lines(X: np.ndarray, eps: float) -> dict[int, list]:
    """Canonical bipartition mask → one generating line [[w_x, w_y], b]."""
    n = X.shape[0]
    full = (1 << n) - 1
    weights = 1 << np.arange(n, dtype=object)
    lines: dict[int, list] = {}
    for i in range(n):
        for j in range(i + 1, n):
            p, q = X[i], X[j]
            span = float(np.linalg.norm(q - p))
            if span == 0:
                continue
            t = (q - p) / span
            u = np.array([-t[1], t[0]])
            mid = 0.5 * (p + q)
            theta = 2.0 * eps / span
            variants = [
                (u, float(u @ p) + eps),
                (u, float(u @ p) - eps),
                (u + theta * t, float((u + theta * t) @ mid)),
                (u - theta * t, float((u - theta * t) @ mid)),
            ]
            for w, b in variants:
                side = (X @ w - b) >= 0
                mask = int(np.sum(weights[side])) if side.any() else 0
                if mask == 0 or mask == full:
                    continue
                key = min(mask, full ^ mask)
                if key not in lines:
                    lines[key] = [[float(w[0]), float(w[1])], float(b)]
    return lines


def _cells_entropy(chosen: Sequence[int], n: int, full: int) -> tuple[float, list[int]]:
    cells = [full]
    for mask in chosen:
        nxt = []
        for cell in cells:
            a, b = cell & mask, cell & ~mask & full
            if a:
                nxt.append(a)
            if b:
                nxt.append(b)
        cells = nxt
    return sizes_entropy([c.bit_count() for c in cells], n), cells


def min_entropy_arrangement(S: PointSet, m: int) -> OraclePartitionResult:
    """Minimum cell-partition entropy over m distinct splitting candidate lines.

    Refining a partition never lowers its entropy, so the entropy of any
    sub-arrangement bounds every extension from below; the search visits
    masks in ascending single-split entropy and prunes on that bound.
    """
    S.require_dim(2, op="min_entropy_arrangement")
    _guard(S.n, MAX_ARRANGEMENT_N, "n")
    if m < 0:
        raise ValidationError(f"m must be ≥ 0, got {m}.")
    _guard(m, MAX_ARRANGEMENT_M, "m")
    n = S.n
    full = (1 << n) - 1
    if m == 0:
        return OraclePartitionResult(HardPartition.single(n), 0.0, 0.0, lines=[])

    eps = 1e-9 * max(S.diameter_bound(), 1e-300)
    lines = _candidate_lines(S.points, eps)
    if len(lines) < m:
        raise ValidationError(
            f"Only {len(lines)} distinct splitting lines exist; cannot place m={m}."
        )
    single = {mask: sizes_entropy([mask.bit_count(), n - mask.bit_count()], n) for mask in lines}
    ordered = sorted(lines, key=lambda mk: (single[mk], mk))

    best_value = math.inf
    best_key: tuple = ()
    best_choice: tuple[int, ...] = ()
    best_cells: list[int] = []

    def consider(choice: tuple[int, ...]) -> None:
        nonlocal best_value, best_key, best_choice, best_cells
        value, cells = _cells_entropy(choice, n, full)
        labels = _labels_from_masks(cells, n)
        key = HardPartition(labels).encoding()
        if value < best_value - 1e-12 or (abs(value - best_value) <= 1e-12 and key < best_key):
            best_value, best_key, best_choice, best_cells = value, key, choice, cells

    def extend(start: int, choice: tuple[int, ...]) -> None:
        if len(choice) == m:
            consider(choice)
            return
        for idx in range(start, len(ordered)):
            mask = ordered[idx]
            if single[mask] > best_value + 1e-12:
                break
            partial, _ = _cells_entropy(choice + (mask,), n, full)
            if partial > best_value + 1e-12:
                continue
            extend(idx + 1, choice + (mask,))

    extend(0, ())
    labels = _labels_from_masks(best_cells, n)
    result = partition_entropy(HardPartition(labels))
    return OraclePartitionResult(
        result.partition, result.entropy_unnormalized, result.entropy_normalized,
        lines=[lines[mask] for mask in best_choice],
    )
