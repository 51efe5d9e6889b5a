"""
roots/geometry/predicates.py

Counted primitives shared by the hull and maxima algorithms.

Every algorithm reports `op_count` = orientation tests + key comparisons. The
comparisons come from one adaptive natural merge sort and one binary search,
both counted here, so algorithms that avoid sorting the whole input show it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

ORIENT_REL_TOL = 1e-12
# Float results this close to the tolerance band are re-evaluated in extended precision.
_RECHECK_BAND = 1e3 * ORIENT_REL_TOL

LEFT, STRAIGHT, RIGHT = 1, 0, -1


@dataclass
class OpCounter:
    orientation_tests: int = 0
    comparisons: int = 0

    @property
    def total(self) -> int:
        return self.orientation_tests + self.comparisons

    def absorb(self, other: "OpCounter") -> None:
        self.orientation_tests += other.orientation_tests
        self.comparisons += other.comparisons


def orient(p: Sequence[float], q: Sequence[float], r: Sequence[float],
           counter: OpCounter | None = None) -> int:
    """Sign of the turn p → q → r: LEFT (ccw), STRAIGHT, or RIGHT (cw).

    Determinants within a 1e-12 relative tolerance of zero count as straight.
    """
    if counter is not None:
        counter.orientation_tests += 1
    t1 = (q[0] - p[0]) * (r[1] - p[1])
    t2 = (q[1] - p[1]) * (r[0] - p[0])
    det = t1 - t2
    scale = abs(t1) + abs(t2)
    if abs(det) > _RECHECK_BAND * scale:
        return LEFT if det > 0 else RIGHT

    P = np.asarray(p, dtype=np.longdouble)
    Q = np.asarray(q, dtype=np.longdouble)
    R = np.asarray(r, dtype=np.longdouble)
    e1 = (Q[0] - P[0]) * (R[1] - P[1])
    e2 = (Q[1] - P[1]) * (R[0] - P[0])
    exact = e1 - e2
    if abs(exact) <= ORIENT_REL_TOL * (abs(e1) + abs(e2)):
        return STRAIGHT
    return LEFT if exact > 0 else RIGHT


def _merge(left: list, right: list, key: Callable[[Any], Any], counter: OpCounter) -> list:
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        counter.comparisons += 1
        if key(right[j]) < key(left[i]):
            out.append(right[j])
            j += 1
        else:
            out.append(left[i])
            i += 1
    out.extend(left[i:])
    out.extend(right[j:])
    return out


def _runs(items: list, key: Callable[[Any], Any], counter: OpCounter) -> list[list]:
    """Maximal non-descending runs; strictly descending runs are reversed in place."""
    runs: list[list] = []
    n = len(items)
    i = 0
    while i < n:
        j = i + 1
        if j == n:
            runs.append(items[i:j])
            break
        counter.comparisons += 1
        if key(items[j]) < key(items[i]):
            while j + 1 < n:
                counter.comparisons += 1
                if not key(items[j + 1]) < key(items[j]):
                    break
                j += 1
            runs.append(items[i:j + 1][::-1])
        else:
            while j + 1 < n:
                counter.comparisons += 1
                if key(items[j + 1]) < key(items[j]):
                    break
                j += 1
            runs.append(items[i:j + 1])
        i = j + 1
    return runs


def counted_sort(items: Sequence, counter: OpCounter,
                 key: Callable[[Any], Any] = lambda v: v) -> list:
    """Stable natural merge sort; presorted input costs n - 1 comparisons."""
    items = list(items)
    if len(items) < 2:
        return items
    runs = _runs(items, key, counter)
    while len(runs) > 1:
        merged = [
            _merge(runs[i], runs[i + 1], key, counter) if i + 1 < len(runs) else runs[i]
            for i in range(0, len(runs), 2)
        ]
        runs = merged
    return runs[0]


def merge_sorted(lists: Sequence[list], counter: OpCounter,
                 key: Callable[[Any], Any] = lambda v: v) -> list:
    """Bottom-up pairwise merge of already sorted lists."""
    runs = [list(l) for l in lists if l]
    if not runs:
        return []
    while len(runs) > 1:
        runs = [
            _merge(runs[i], runs[i + 1], key, counter) if i + 1 < len(runs) else runs[i]
            for i in range(0, len(runs), 2)
        ]
    return runs[0]


def bisect_right_counted(values: Sequence, target: Any, counter: OpCounter) -> int:
    """First index whose value is > target."""
    lo, hi = 0, len(values)
    while lo < hi:
        mid = (lo + hi) // 2
        counter.comparisons += 1
        if target < values[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


def bisect_left_counted(values: Sequence, target: Any, counter: OpCounter) -> int:
    """First index whose value is ≥ target."""
    lo, hi = 0, len(values)
    while lo < hi:
        mid = (lo + hi) // 2
        counter.comparisons += 1
        if values[mid] < target:
            lo = mid + 1
        else:
            hi = mid
    return lo
