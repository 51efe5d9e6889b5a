"""
roots/geometry/metrics.py

Geometric fidelity metrics between point sets.

Chamfer uses squared nearest-neighbour distances, averaged per direction.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from soil.errors import ValidationError
from soil.pointset import PointSet


def _same_dim(A: PointSet, B: PointSet, op: str) -> None:
    if A.d != B.d:
        raise ValidationError(f"{op}: dimension mismatch ({A.d} vs {B.d}).")


def hausdorff(A: PointSet, B: PointSet) -> float:
    _same_dim(A, B, "hausdorff")
    forward = directed_hausdorff(A.points, B.points, seed=0)[0]
    backward = directed_hausdorff(B.points, A.points, seed=0)[0]
    return float(max(forward, backward))


def nearest(queries: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Squared nearest distance and neighbour index; equal distances pick the lower index."""
    tree = cKDTree(targets)
    if targets.shape[0] == 1:
        dist, idx = tree.query(queries, k=1)
        return np.asarray(dist) ** 2, np.zeros(queries.shape[0], dtype=np.int64)
    dist, idx = tree.query(queries, k=2)
    chosen = idx[:, 0].astype(np.int64)
    for row in np.flatnonzero(dist[:, 0] == dist[:, 1]):
        # all targets at that distance compete; lowest index wins
        ball = np.asarray(tree.query_ball_point(queries[row], dist[row, 0] * (1.0 + 1e-12)), dtype=np.int64)
        d2 = np.sum((targets[ball] - queries[row]) ** 2, axis=1)
        chosen[row] = int(ball[d2 == d2.min()].min())
    return dist[:, 0] ** 2, chosen


def chamfer(S: PointSet, S2: PointSet) -> float:
    _same_dim(S, S2, "chamfer")
    d_fwd, _ = nearest(S.points, S2.points)
    d_bwd, _ = nearest(S2.points, S.points)
    return float(d_fwd.mean() + d_bwd.mean())


def chamfer_with_grad(S: PointSet, S2: PointSet) -> tuple[float, np.ndarray]:
    """Chamfer value and its (sub)gradient with respect to the points of S2."""
    _same_dim(S, S2, "chamfer")
    X, Y = S.points, S2.points
    d_fwd, nn_fwd = nearest(X, Y)
    d_bwd, nn_bwd = nearest(Y, X)

    grad = 2.0 * (Y - X[nn_bwd]) / Y.shape[0]
    np.add.at(grad, nn_fwd, 2.0 * (Y[nn_fwd] - X) / X.shape[0])
    return float(d_fwd.mean() + d_bwd.mean()), grad
