"""
roots/geometry/maxima.py

3-D maxima (Pareto frontier) by sort-and-sweep with a 2-D staircase.

A point is removed only when another point is strictly greater in every
coordinate, so duplicated points survive together.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from soil.pointset import HardPartition, PointSet

from .predicates import OpCounter, bisect_left_counted, bisect_right_counted, counted_sort


@dataclass(frozen=True)
class MaximaResult:
    indices: np.ndarray
    comparisons: int
    elapsed_ns: int | None = None

    @property
    def op_count(self) -> int:
        return self.comparisons

    def to_dict(self) -> dict:
        return {
            "indices": self.indices.tolist(),
            "op_count": self.op_count,
            "elapsed_ns": self.elapsed_ns,
        }


class _Staircase:
    """2-D maxima of the (y, z) pairs seen so far: ys ascending, zs strictly descending."""

    def __init__(self, counter: OpCounter):
        self.ys: list[float] = []
        self.zs: list[float] = []
        self.counter = counter

    def dominates(self, y: float, z: float) -> bool:
        """Some stored pair has y' > y and z' > z."""
        idx = bisect_right_counted(self.ys, y, self.counter)
        if idx == len(self.ys):
            return False
        self.counter.comparisons += 1
        return self.zs[idx] > z

    def insert(self, y: float, z: float) -> None:
        idx = bisect_left_counted(self.ys, y, self.counter)
        hi = idx
        if idx < len(self.ys):
            self.counter.comparisons += 1
            if self.zs[idx] >= z:
                return
            self.counter.comparisons += 1
            if self.ys[idx] == y:
                hi = idx + 1
        lo = idx
        while lo > 0:
            self.counter.comparisons += 1
            if self.zs[lo - 1] > z:
                break
            lo -= 1
        self.ys[lo:hi] = [y]
        self.zs[lo:hi] = [z]


def _maxima_of(points: list[tuple[float, float, float]], ids: list[int],
               counter: OpCounter) -> list[int]:
    order = counted_sort(range(len(ids)), counter,
                         key=lambda i: (-points[i][0], -points[i][1], -points[i][2]))
    stair = _Staircase(counter)
    kept: list[int] = []
    pos = 0
    while pos < len(order):
        end = pos + 1
        while end < len(order):
            counter.comparisons += 1
            if points[order[end]][0] != points[order[pos]][0]:
                break
            end += 1
        group = order[pos:end]
        for i in group:
            if not stair.dominates(points[i][1], points[i][2]):
                kept.append(ids[i])
        for i in group:
            stair.insert(points[i][1], points[i][2])
        pos = end
    return kept


def _as_triples(S: PointSet, op: str) -> list[tuple[float, float, float]]:
    S.require_dim(3, op=op)
    return [(float(a), float(b), float(c)) for a, b, c in S.points.tolist()]


def maxima_3d(S: PointSet) -> MaximaResult:
    started = time.perf_counter_ns()
    counter = OpCounter()
    pts = _as_triples(S, "maxima_3d")
    kept = _maxima_of(pts, list(range(len(pts))), counter)
    return MaximaResult(np.array(sorted(kept), dtype=np.int64), counter.comparisons,
                        time.perf_counter_ns() - started)


def adaptive_maxima(S: PointSet, P: HardPartition) -> MaximaResult:
    """Per-part maxima, then the maxima of the union of part candidates."""
    started = time.perf_counter_ns()
    counter = OpCounter()
    pts = _as_triples(S, "adaptive_maxima")
    P.check_covers(S)

    candidates: list[int] = []
    for idx in P.parts():
        ids = idx.tolist()
        candidates.extend(_maxima_of([pts[i] for i in ids], ids, counter))

    candidates.sort()
    kept = _maxima_of([pts[i] for i in candidates], candidates, counter)
    return MaximaResult(np.array(sorted(kept), dtype=np.int64), counter.comparisons,
                        time.perf_counter_ns() - started)


def maxima_f1(predicted: Iterable[int], truth: Iterable[int]) -> float:
    pred, true = set(int(i) for i in predicted), set(int(i) for i in truth)
    if not pred and not true:
        return 1.0
    hits = len(pred & true)
    if hits == 0:
        return 0.0
    precision = hits / len(pred)
    recall = hits / len(true)
    return 2 * precision * recall / (precision + recall)
