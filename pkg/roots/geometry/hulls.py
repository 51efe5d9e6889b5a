"""
roots/geometry/hulls.py

Exact 2-D convex hulls: the monotone-chain baseline, Chan's output-sensitive
algorithm, and the partition-merge hull that exploits a low-entropy partition.

All three return the same canonical vertex sequence: counter-clockwise,
collinear boundary points dropped, starting at the lexicographic minimum.
Degenerate inputs have defined outputs: one distinct point gives a single
vertex, a collinear set gives its two extreme endpoints.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from soil.errors import ValidationError
from soil.pointset import HardPartition, PointSet

from .predicates import LEFT, RIGHT, STRAIGHT, OpCounter, counted_sort, merge_sorted, orient

logger = logging.getLogger("roots.geometry.hulls")

Point = tuple[float, float]


@dataclass(frozen=True)
class HullResult:
    vertices: np.ndarray
    area: float
    orientation_tests: int
    comparisons: int
    elapsed_ns: int | None = None

    @property
    def op_count(self) -> int:
        return self.orientation_tests + self.comparisons

    @property
    def h(self) -> int:
        return int(self.vertices.shape[0])

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "area": self.area,
            "op_count": self.op_count,
            "orientation_tests": self.orientation_tests,
            "comparisons": self.comparisons,
            "elapsed_ns": self.elapsed_ns,
        }


def hull_area(vertices) -> float:
    """Shoelace area of a CCW polygon; fewer than 3 vertices → 0."""
    V = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if V.shape[0] < 3:
        return 0.0
    x, y = V[:, 0], V[:, 1]
    return abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))) / 2.0


def canonical_vertices(vertices) -> np.ndarray:
    """Rotate a CCW vertex cycle to start at its lexicographic minimum."""
    V = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    if V.shape[0] == 0:
        return V
    start = int(np.lexsort((V[:, 1], V[:, 0]))[0])
    return np.roll(V, -start, axis=0)


def _as_points(S: PointSet, op: str) -> list[Point]:
    S.require_dim(2, op=op)
    return [(float(x), float(y)) for x, y in S.points.tolist()]


def _result(vertices: list[Point], counter: OpCounter, started: int) -> HullResult:
    elapsed = time.perf_counter_ns() - started
    V = np.array(vertices, dtype=np.float64).reshape(-1, 2)
    return HullResult(V, hull_area(V), counter.orientation_tests, counter.comparisons, elapsed)


# ═══════════════════════════════════════════════════════════════════════════════
# MONOTONE CHAIN
# ═══════════════════════════════════════════════════════════════════════════════

def _dedupe_sorted(points: list[Point]) -> list[Point]:
    out: list[Point] = []
    for p in points:
        if not out or out[-1] != p:
            out.append(p)
    return out


def chain_presorted(points: list[Point], counter: OpCounter) -> list[Point]:
    """Andrew's monotone chain over lexicographically sorted points."""
    pts = _dedupe_sorted(points)
    if len(pts) <= 2:
        return pts

    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and orient(lower[-2], lower[-1], p, counter) != LEFT:
            lower.pop()
        lower.append(p)

    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient(upper[-2], upper[-1], p, counter) != LEFT:
            upper.pop()
        upper.append(p)

    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 2 else lower


def monotone_chain_hull(S: PointSet) -> HullResult:
    started = time.perf_counter_ns()
    counter = OpCounter()
    pts = counted_sort(_as_points(S, "monotone_chain_hull"), counter)
    return _result(chain_presorted(pts, counter), counter, started)


# ═══════════════════════════════════════════════════════════════════════════════
# CHAN'S ALGORITHM
# ═══════════════════════════════════════════════════════════════════════════════

def _dist2(p: Point, q: Point) -> float:
    return (q[0] - p[0]) ** 2 + (q[1] - p[1]) ** 2


def _better(p: Point, current: Point, challenger: Point, counter: OpCounter) -> bool:
    """True when challenger should replace current as the next CCW hull vertex after p."""
    turn = orient(p, current, challenger, counter)
    return turn == RIGHT or (turn == STRAIGHT and _dist2(p, challenger) > _dist2(p, current))


def _scan_tangent(hull: list[Point], p: Point, counter: OpCounter) -> int:
    best = 0
    for i in range(1, len(hull)):
        if hull[best] == p or (hull[i] != p and _better(p, hull[best], hull[i], counter)):
            best = i
    return best


def _is_tangent(hull: list[Point], p: Point, c: int, counter: OpCounter) -> bool:
    n = len(hull)
    return (orient(p, hull[c], hull[(c - 1) % n], counter) != RIGHT
            and orient(p, hull[c], hull[(c + 1) % n], counter) != RIGHT)


def _tangent(hull: list[Point], p: Point, counter: OpCounter) -> int:
    """Index of the vertex where the right tangent from p touches a CCW hull.

    Binary search over the hull; when degeneracies defeat it, a linear scan.
    """
    n = len(hull)
    if n <= 3:
        return _scan_tangent(hull, p, counter)

    lo, hi = 0, n
    lo_prev = orient(p, hull[0], hull[-1], counter)
    lo_next = orient(p, hull[0], hull[1], counter)
    found = None
    while lo < hi:
        c = (lo + hi) // 2
        c_prev = orient(p, hull[c], hull[(c - 1) % n], counter)
        c_next = orient(p, hull[c], hull[(c + 1) % n], counter)
        c_side = orient(p, hull[lo], hull[c], counter)
        if c_prev != RIGHT and c_next != RIGHT:
            found = c
            break
        if (c_side == LEFT and (lo_next == RIGHT or lo_prev == lo_next)) or (
            c_side == RIGHT and c_prev == RIGHT
        ):
            hi = c
        else:
            lo = c + 1
            lo_prev = -c_next
            lo_next = orient(p, hull[lo % n], hull[(lo + 1) % n], counter)
    if found is None:
        found = lo % n
        if not _is_tangent(hull, p, found, counter):
            return _scan_tangent(hull, p, counter)

    # Prefer the farther of two collinear tangent vertices.
    for step in (1, -1):
        other = (found + step) % n
        if hull[other] != p and orient(p, hull[found], hull[other], counter) == STRAIGHT \
                and _dist2(p, hull[other]) > _dist2(p, hull[found]):
            found = other
    return found


def _group_hulls(pts: list[Point], m: int, counter: OpCounter) -> list[list[Point]]:
    return [chain_presorted(counted_sort(pts[i:i + m], counter), counter)
            for i in range(0, len(pts), m)]


def _march(hulls: list[list[Point]], steps: int, counter: OpCounter) -> list[Point] | None:
    """Jarvis march over group hulls; None when the hull has more than `steps` vertices."""
    g0 = 0
    for g in range(1, len(hulls)):
        counter.comparisons += 1
        if hulls[g][0] < hulls[g0][0]:
            g0 = g
    start = hulls[g0][0]
    result = [start]
    g, i = g0, 0

    for _ in range(steps):
        p = hulls[g][i]
        own = hulls[g]
        candidate = (g, (i + 1) % len(own)) if own[(i + 1) % len(own)] != p else None
        for h, hull in enumerate(hulls):
            if h == g:
                continue
            s = _tangent(hull, p, counter)
            if hull[s] == p:
                s = (s + 1) % len(hull)
                if hull[s] == p:
                    continue
            if candidate is None or _better(p, hulls[candidate[0]][candidate[1]], hull[s], counter):
                candidate = (h, s)
        if candidate is None:
            return result
        g, i = candidate
        q = hulls[g][i]
        if q == start:
            return result
        result.append(q)
    return None


def chans_hull(S: PointSet) -> HullResult:
    """Output-sensitive hull with squaring group sizes m = min(2^(2^t), n)."""
    started = time.perf_counter_ns()
    counter = OpCounter()
    pts = _as_points(S, "chans_hull")
    n = len(pts)
    t = 1
    while True:
        m = min(2 ** (2 ** t), n)
        hulls = _group_hulls(pts, m, counter)
        vertices = _march(hulls, m, counter)
        if vertices is not None:
            logger.debug(f"chans_hull closed at t={t} (m={m}, h={len(vertices)})")
            return _result(vertices, counter, started)
        t += 1


# ═══════════════════════════════════════════════════════════════════════════════
# PARTITION-MERGE HULL
# ═══════════════════════════════════════════════════════════════════════════════

def _inner_radius(polygon: list[Point], center: np.ndarray, counter: OpCounter) -> float:
    """Distance from `center` to the nearest edge line of a CCW polygon; 0 if outside."""
    radius = math.inf
    for a, b in zip(polygon, polygon[1:] + polygon[:1]):
        counter.orientation_tests += 1
        ex, ey = b[0] - a[0], b[1] - a[1]
        signed = (ex * (center[1] - a[1]) - ey * (center[0] - a[0])) / math.hypot(ex, ey)
        radius = min(radius, signed)
    return max(radius, 0.0)


def _interior_parts(pts: list[Point], parts: list[np.ndarray], counter: OpCounter) -> set[int]:
    """Parts lying strictly inside the hull of every part's outermost point.

    The outermost point of a part is its farthest point from the centroid c of
    S. A part whose outermost distance is below the inradius of that hull
    about c sits in an open disc inside the hull, so none of its points is a
    hull vertex of S. Each hull vertex is some part's outermost point, and that
    part is never dropped, so the hull of the kept parts is the hull of S.
    """
    if len(parts) < 3:
        return set()
    X = np.asarray(pts, dtype=np.float64)
    center = X.mean(axis=0)
    reach = np.empty(len(parts))
    outer: list[Point] = []
    for j, idx in enumerate(parts):
        d2 = np.sum((X[idx] - center) ** 2, axis=1)
        counter.comparisons += max(idx.size - 1, 0)
        far = int(np.argmax(d2))
        reach[j] = math.sqrt(float(d2[far]))
        outer.append(pts[int(idx[far])])

    polygon = chain_presorted(counted_sort(outer, counter), counter)
    if len(polygon) < 3:
        return set()
    inradius = _inner_radius(polygon, center, counter)
    margin = 1e-9 * (1.0 + float(reach.max()))
    dropped = set()
    for j in range(len(parts)):
        counter.comparisons += 1
        if reach[j] < inradius - margin:
            dropped.add(j)
    return dropped


def partition_merge_hull(S: PointSet, P: HardPartition) -> HullResult:
    """Per-part hulls, then the hull of the union of part-hull vertices.

    With three or more parts, parts that lie wholly inside the hull of the
    parts' outermost points are dropped before any sorting. Part-hull vertices
    stay in sorted order, so the union is a counted merge of sorted lists
    rather than a fresh sort.
    """
    started = time.perf_counter_ns()
    counter = OpCounter()
    pts = _as_points(S, "partition_merge_hull")
    P.check_covers(S)

    parts = list(P.parts())
    dropped = _interior_parts(pts, parts, counter)
    if dropped:
        logger.debug(f"partition_merge_hull: {len(dropped)} of {len(parts)} parts are interior")

    part_vertices: list[list[Point]] = []
    for j, idx in enumerate(parts):
        if j in dropped:
            continue
        ordered = counted_sort([pts[i] for i in idx.tolist()], counter)
        kept = set(chain_presorted(ordered, counter))
        part_vertices.append(_dedupe_sorted([p for p in ordered if p in kept]))

    merged = merge_sorted(part_vertices, counter)
    return _result(chain_presorted(merged, counter), counter, started)


def hull_error_pct(H_true: HullResult, H_pred: HullResult) -> float:
    if H_true.area <= 0:
        raise ValidationError(
            "Reference hull has zero area; hull error percentage is undefined.\n"
            "  Use hausdorff distance for degenerate (collinear or tiny) inputs."
        )
    return abs(H_true.area - H_pred.area) / H_true.area * 100.0


def hull_of_points(S: PointSet, algorithm: str = "monotone_chain",
                   P: HardPartition | None = None) -> HullResult:
    """Dispatch by algorithm name: monotone_chain, chan or partition_merge."""
    if algorithm == "monotone_chain":
        return monotone_chain_hull(S)
    if algorithm == "chan":
        return chans_hull(S)
    if algorithm == "partition_merge":
        return partition_merge_hull(S, P if P is not None else HardPartition.single(S.n))
    raise ValidationError(
        f"Unknown hull algorithm '{algorithm}'.\n"
        f"  Available: monotone_chain, chan, partition_merge"
    )
