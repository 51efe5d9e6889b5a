#!/usr/bin/env python3
"""
Sprint 5 Verification — run from project root:
    python tests/test_sprint5.py

Tests the geometry layer: counted predicates, the three exact hulls against
a brute-force oracle, the partition-merge advantage, 3-D maxima, and the
fidelity metrics.
"""

import sys
import math
from pathlib import Path

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def brute_force_hull(X):
    """O(n³) oracle: p→q is a CCW hull edge iff every other point lies strictly to its left."""
    verts = set()
    n = len(X)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            p, q = X[i], X[j]
            ok = True
            for k in range(n):
                if k in (i, j):
                    continue
                r = X[k]
                if (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]) <= 0:
                    ok = False
                    break
            if ok:
                verts.add((float(p[0]), float(p[1])))
                verts.add((float(q[0]), float(q[1])))
    return verts


def brute_force_maxima(X):
    n = len(X)
    return [i for i in range(n) if not any((X[j] > X[i]).all() for j in range(n) if j != i)]


def test_predicates():
    from roots.geometry.predicates import OpCounter, orient, counted_sort, LEFT, RIGHT, STRAIGHT

    c = OpCounter()
    assert orient((0, 0), (1, 0), (0, 1), c) == LEFT, "FAIL: ccw turn"
    assert orient((0, 0), (1, 0), (0, -1), c) == RIGHT, "FAIL: cw turn"
    assert orient((0, 0), (1, 1), (2, 2), c) == STRAIGHT, "FAIL: collinear"
    assert orient((0.1, 0.1), (0.2, 0.2), (0.3, 0.3 + 1e-17), c) == STRAIGHT, \
        "FAIL: within-tolerance determinant should count as straight"
    assert c.orientation_tests == 4, "FAIL: every orientation test counted"
    print("  ✓ orient: left, right, straight and tolerance band; tests counted")

    c = OpCounter()
    assert counted_sort(list(range(10)), c) == list(range(10)) and c.comparisons == 9, \
        "FAIL: presorted input should cost n − 1 comparisons"
    c = OpCounter()
    data = [5, 3, 9, 1, 1, 7, 2]
    assert counted_sort(data, c) == sorted(data) and c.comparisons > 0, "FAIL: counted sort"
    print("  ✓ Natural merge sort: correct, presorted costs n − 1")


def test_hulls_match_brute_force():
    import numpy as np
    from soil.pointset import PointSet, HardPartition
    from roots.geometry import (monotone_chain_hull, chans_hull, partition_merge_hull,
                                canonical_vertices, hull_area)

    for seed in range(40):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 60))
        X = rng.random((n, 2))
        S = PointSet(X)
        mc = monotone_chain_hull(S)
        oracle = brute_force_hull(X)
        assert {tuple(v) for v in mc.vertices.tolist()} == oracle, f"FAIL: seed {seed} vs oracle"

        labels = rng.integers(0, 4, n)
        canon = canonical_vertices(mc.vertices)
        for other in (chans_hull(S), partition_merge_hull(S, HardPartition(labels))):
            assert np.array_equal(canonical_vertices(other.vertices), canon), \
                f"FAIL: seed {seed} hulls disagree"
        assert np.array_equal(mc.vertices, canon), "FAIL: output not canonical"
        assert abs(mc.area - hull_area(mc.vertices)) < 1e-12, "FAIL: area ≠ shoelace"
        V = mc.vertices
        for i in range(len(V)):
            a, b, c = V[i], V[(i + 1) % len(V)], V[(i + 2) % len(V)]
            assert (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) > 0, \
                "FAIL: consecutive vertices must turn strictly left"
    print("  ✓ 40 random inputs: monotone chain = O(n³) oracle; Chan and partition-merge agree")


def test_degenerate_hulls():
    import numpy as np
    from soil.pointset import PointSet, HardPartition
    from roots.geometry import monotone_chain_hull, chans_hull, partition_merge_hull

    square = PointSet(np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], dtype=float))
    h = monotone_chain_hull(square)
    assert h.h == 4 and abs(h.area - 1.0) < 1e-12, "FAIL: unit square + centre"
    print("  ✓ Unit-square corners plus centre → 4 corners, area 1")

    families = {
        "single": np.array([[0.3, 0.7]]),
        "duplicates": np.array([[1.0, 2.0]] * 5),
        "collinear": np.array([[i, 2 * i] for i in (3, 0, 5, 1, 4)], dtype=float),
        "pair": np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]),
        "collinear_edge": np.array([[0, 0], [1, 0], [2, 0], [2, 2], [0, 2], [1, 2]], dtype=float),
    }
    expected_h = {"single": 1, "duplicates": 1, "collinear": 2, "pair": 2, "collinear_edge": 4}
    for name, X in families.items():
        S = PointSet(X)
        results = [monotone_chain_hull(S), chans_hull(S),
                   partition_merge_hull(S, HardPartition(np.arange(S.n) % 2))]
        for r in results:
            assert r.h == expected_h[name], f"FAIL: {name} gave {r.h} vertices"
            assert np.array_equal(r.vertices, results[0].vertices), f"FAIL: {name} disagreement"
        if name == "collinear":
            assert {tuple(v) for v in results[0].vertices.tolist()} == {(0.0, 0.0), (5.0, 10.0)}, \
                "FAIL: collinear set → its two endpoints"
            assert results[0].area == 0.0, "FAIL: collinear area 0"
    print("  ✓ Single points, duplicates, collinear sets and collinear edges handled alike")


def test_counted_advantages():
    import numpy as np
    from soil.pointset import PointSet, HardPartition
    from soil.generate import DatasetSpec, gen_dataset
    from roots.geometry import monotone_chain_hull, chans_hull, partition_merge_hull

    # op_count is orientation tests plus key comparisons; both parts are reported.
    rng = np.random.default_rng(12)
    interior = rng.random((997, 2))
    interior = interior[interior.sum(axis=1) < 0.98] * 0.99 + 0.001
    tri = PointSet(np.vstack([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], interior]))
    chan, mc = chans_hull(tri), monotone_chain_hull(tri)
    assert chan.h == 3, "FAIL: triangle hull should have 3 vertices"
    assert chan.op_count == chan.orientation_tests + chan.comparisons, "FAIL: op_count composition"
    assert chan.op_count < mc.op_count, f"FAIL: Chan {chan.op_count} vs chain {mc.op_count}"
    print(f"  ✓ h = 3: Chan {chan.op_count} ops < monotone chain {mc.op_count} "
          f"(orientation tests {chan.orientation_tests} vs {mc.orientation_tests})")

    blobs = gen_dataset(DatasetSpec("blobs2d", 4096, seed=0, params={"blobs": 16, "spread": 0.01}))
    pm = partition_merge_hull(blobs.points, HardPartition(blobs.labels))
    base = monotone_chain_hull(blobs.points)
    assert np.array_equal(pm.vertices, base.vertices), "FAIL: partition-merge changed the hull"
    assert pm.op_count < base.op_count, f"FAIL: partition-merge {pm.op_count} vs {base.op_count}"
    assert pm.orientation_tests < base.orientation_tests, \
        f"FAIL: orientation tests {pm.orientation_tests} vs {base.orientation_tests}"
    print(f"  ✓ 16 blobs, n = 4096: partition-merge {pm.op_count} ops < {base.op_count}; "
          f"orientation tests {pm.orientation_tests} < {base.orientation_tests}")

    uni = gen_dataset(DatasetSpec("uniform2d", 4096, seed=0)).points
    one = partition_merge_hull(uni, HardPartition.single(uni.n)).op_count
    ref = monotone_chain_hull(uni).op_count
    assert abs(one - ref) <= 0.05 * ref, f"FAIL: trivial partition {one} vs {ref}"
    print("  ✓ Uniform input with one part stays within 5% of the baseline")

    # 4×4 grid of cells over the unit square: the four middle cells are interior.
    cells = np.minimum((uni.points * 4).astype(int), 3)
    grid = HardPartition(cells[:, 0] * 4 + cells[:, 1])
    gridded = partition_merge_hull(uni, grid)
    assert np.array_equal(gridded.vertices, monotone_chain_hull(uni).vertices), \
        "FAIL: dropping interior parts changed the hull"
    assert gridded.op_count < 0.85 * ref, f"FAIL: grid partition {gridded.op_count} vs {ref}"
    print(f"  ✓ Uniform input on a 4×4 grid partition: exact hull in {gridded.op_count} ops")


def test_area_and_error():
    import numpy as np
    from soil.errors import ValidationError
    from soil.pointset import PointSet
    from roots.geometry import hull_area, hull_error_pct, monotone_chain_hull, HullResult

    assert hull_area([[0, 0], [1, 0], [1, 1], [0, 1]]) == 1.0, "FAIL: unit square"
    assert hull_area([[0, 0], [1, 0], [0, 1]]) == 0.5, "FAIL: triangle"
    assert hull_area([[0, 0], [1, 1]]) == 0.0, "FAIL: < 3 vertices → 0"
    V = monotone_chain_hull(PointSet(np.random.default_rng(5).random((80, 2)))).vertices
    fan = sum(0.5 * abs((V[i][0] - V[0][0]) * (V[i + 1][1] - V[0][1])
                        - (V[i][1] - V[0][1]) * (V[i + 1][0] - V[0][0]))
              for i in range(1, len(V) - 1))
    assert abs(hull_area(V) - fan) < 1e-12, "FAIL: shoelace vs fan triangulation"
    print("  ✓ Shoelace: square 1, triangle 0.5, random hull = fan triangulation")

    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    true = HullResult(square, 1.0, 0, 0)
    assert hull_error_pct(true, true) == 0.0, "FAIL: identical → 0%"
    assert abs(hull_error_pct(true, HullResult(square, 0.98, 0, 0)) - 2.0) < 1e-9, "FAIL: 2%"
    try:
        hull_error_pct(HullResult(square[:2], 0.0, 0, 0), true)
        assert False, "FAIL: zero reference area accepted"
    except ValidationError:
        pass
    print("  ✓ Hull error: 0% identical, 2% for 1.0 vs 0.98, zero area rejected")


def test_maxima():
    import numpy as np
    from soil.pointset import PointSet, HardPartition
    from soil.generate import DatasetSpec, gen_dataset
    from roots.geometry import maxima_3d, adaptive_maxima, maxima_f1

    assert maxima_3d(PointSet(np.array([[0, 0, 0], [1, 1, 1]], dtype=float))).indices.tolist() == [1]
    anti = PointSet(np.eye(3))
    assert maxima_3d(anti).indices.tolist() == [0, 1, 2], "FAIL: antichain keeps all"
    dup = PointSet(np.array([[1, 1, 1], [1, 1, 1], [0, 0, 0]], dtype=float))
    assert maxima_3d(dup).indices.tolist() == [0, 1], "FAIL: equal points both retained"
    weak = PointSet(np.array([[1, 1, 1], [1, 0.5, 0.5]], dtype=float))
    assert maxima_3d(weak).indices.tolist() == [0, 1], "FAIL: weak dominance keeps the point"
    print("  ✓ Strict dominance: chain, antichain, duplicates, ties in one coordinate")

    for seed in range(5):
        X = np.random.default_rng(seed).random((200, 3))
        X[:20] = np.round(X[:20], 1)
        S = PointSet(X)
        want = brute_force_maxima(X)
        assert maxima_3d(S).indices.tolist() == want, f"FAIL: seed {seed} vs O(n²) oracle"
        labels = np.random.default_rng(seed + 50).integers(0, 6, 200)
        assert adaptive_maxima(S, HardPartition(labels)).indices.tolist() == want, \
            f"FAIL: adaptive maxima seed {seed}"
    print("  ✓ maxima_3d and adaptive_maxima equal the O(n²) oracle")

    blobs = gen_dataset(DatasetSpec("blobs3d", 4096, seed=0, params={"blobs": 16, "spread": 0.05}))
    adaptive = adaptive_maxima(blobs.points, HardPartition(blobs.labels))
    raw = maxima_3d(blobs.points)
    assert np.array_equal(adaptive.indices, raw.indices), "FAIL: adaptive result differs"
    assert adaptive.op_count < raw.op_count, f"FAIL: {adaptive.op_count} vs {raw.op_count}"
    print(f"  ✓ Clustered blobs: adaptive {adaptive.op_count} comparisons < {raw.op_count}")

    assert maxima_f1([1, 2], [1, 2]) == 1.0 and maxima_f1([], []) == 1.0, "FAIL: F1 = 1 cases"
    assert maxima_f1([1], [2]) == 0.0 and maxima_f1([], [3]) == 0.0, "FAIL: F1 = 0 cases"
    assert abs(maxima_f1([1, 2], [1]) - 2 / 3) < 1e-12, "FAIL: precision ½, recall 1 → ⅔"
    print("  ✓ Maxima F1: identical 1, disjoint 0, precision ½ / recall 1 → ⅔")


def test_metrics():
    import numpy as np
    from soil.pointset import PointSet
    from roots.geometry import hausdorff, chamfer, chamfer_with_grad
    from roots.geometry.metrics import nearest

    A = PointSet(np.array([[0.0, 0.0]]))
    B = PointSet(np.array([[3.0, 4.0]]))
    assert hausdorff(A, B) == 5.0 and chamfer(A, B) == 50.0, "FAIL: (0,0) vs (3,4)"
    assert hausdorff(A, A) == 0.0 and chamfer(A, A) == 0.0, "FAIL: identical sets → 0"
    print("  ✓ (0,0) vs (3,4): Hausdorff 5, Chamfer 50; identical sets → 0")

    rng = np.random.default_rng(9)
    X, Y = rng.random((30, 2)), rng.random((45, 2))
    D = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2))
    haus = max(D.min(axis=1).max(), D.min(axis=0).max())
    cham = (D.min(axis=1) ** 2).mean() + (D.min(axis=0) ** 2).mean()
    SX, SY = PointSet(X), PointSet(Y)
    assert abs(hausdorff(SX, SY) - haus) < 1e-12, "FAIL: Hausdorff vs double loop"
    assert abs(hausdorff(SY, SX) - haus) < 1e-12, "FAIL: Hausdorff should be symmetric"
    assert abs(chamfer(SX, SY) - cham) < 1e-12, "FAIL: Chamfer vs double loop"
    print("  ✓ Random pair: both metrics equal brute-force recomputation; Hausdorff symmetric")

    value, grad = chamfer_with_grad(SX, SY)
    h = 1e-7
    fd = np.zeros_like(Y)
    for idx in np.ndindex(Y.shape):
        up, down = Y.copy(), Y.copy()
        up[idx] += h
        down[idx] -= h
        fd[idx] = (chamfer(SX, PointSet(up)) - chamfer(SX, PointSet(down))) / (2 * h)
    assert abs(value - cham) < 1e-12, "FAIL: chamfer_with_grad value"
    assert np.allclose(grad, fd, atol=1e-6), "FAIL: Chamfer gradient vs finite differences"
    print("  ✓ Chamfer gradient matches finite differences away from ties")

    axes = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, -1.0], [-1.0, 0.0]])
    far = np.array([[5.0, 5.0], [-4.0, 6.0]])
    for seed in range(6):
        targets = np.vstack([far, axes[: 3 + seed % 2]])
        targets = targets[np.random.default_rng(seed).permutation(len(targets))]
        tied = np.flatnonzero(np.isclose(np.linalg.norm(targets, axis=1), 1.0))
        d2, idx = nearest(np.zeros((1, 2)), targets)
        assert d2[0] == 1.0 and idx[0] == tied.min(), \
            f"FAIL: {len(tied)}-way tie picked {idx[0]}, expected {tied.min()}"
    print("  ✓ Three- and four-way distance ties resolve to the lowest target index")


if __name__ == "__main__":
    print("\n=== Sprint 5 Verification ===\n")

    for name, fn in [
        ("Test 1: Counted predicates", test_predicates),
        ("Test 2: Hulls vs brute force", test_hulls_match_brute_force),
        ("Test 3: Degenerate hulls", test_degenerate_hulls),
        ("Test 4: Counted advantages", test_counted_advantages),
        ("Test 5: Area and hull error", test_area_and_error),
        ("Test 6: 3-D maxima", test_maxima),
        ("Test 7: Fidelity metrics", test_metrics),
    ]:
        print(name)
        try:
            fn()
            print("  PASSED\n")
        except Exception as e:
            print(f"  FAILED: {e}\n")
            import traceback
            traceback.print_exc()
            print()

    print("=== Done ===")
