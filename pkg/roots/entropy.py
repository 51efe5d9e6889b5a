"""
roots/entropy.py

Ball-based differentiable entropy H_diff: soft assignments of points to
anchors, the entropy of the resulting cluster masses, its hand-derived
gradients, anchor fitting, the hard (discrete) limit, elbow selection of k,
and the row-entropy primitive for stochastic matrices.

All entropies are in nats. Assignment probabilities are

    p_ij = softmax_j(-alpha_eff * ||x_i - c_j||^2),    p_j = (1/n) sum_i p_ij,
    H_diff = -sum_j p_j log p_j

where alpha_eff = alpha (raw mode) or alpha / msd(S) (normalized mode, msd the
mean squared pairwise distance of S).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from soil.errors import NumericalError, ValidationError
from soil.generate import derive_rng
from soil.pointset import PointSet

logger = logging.getLogger("roots.entropy")

PROB_FLOOR = 1e-300
SCALE_SAMPLE_PAIRS = 2048
SAFE_ALPHA_RANGE = (5.0, 20.0)
SCALE_MODES = ("raw", "normalized")


def default_k(n: int) -> int:
    """Anchor count heuristic min(16, n/4), at least 1."""
    return max(1, min(16, n // 4))


def sqrt_k(n: int) -> int:
    """Alternative anchor count heuristic k = sqrt(n)."""
    return max(1, int(round(math.sqrt(n))))


def check_alpha_range(alpha: float) -> bool:
    lo, hi = SAFE_ALPHA_RANGE
    inside = lo <= alpha <= hi
    if not inside:
        logger.warning(f"alpha={alpha:g} is outside the moderate range [{lo:g}, {hi:g}]")
    return inside


def entropy_of_masses(masses: np.ndarray) -> float:
    """-sum p log p with p clamped at PROB_FLOOR and 0 log 0 = 0."""
    p = np.asarray(masses, dtype=np.float64)
    safe = np.maximum(p, PROB_FLOOR)
    terms = np.where(p > 0, p * np.log(safe), 0.0)
    return float(max(0.0, -np.sum(terms)))


# ═══════════════════════════════════════════════════════════════════════════════
# TYPES
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AnchorSet:
    """k anchor centres with sharpness alpha."""
    centers: np.ndarray
    alpha: float
    scale_mode: str = "raw"

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValidationError(f"Anchor centers must have shape (k ≥ 1, d), got {c.shape}.")
        if not np.isfinite(c).all():
            raise ValidationError("Anchor centers contain non-finite values.")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValidationError(f"alpha must be a finite positive real, got {self.alpha}.")
        if self.scale_mode not in SCALE_MODES:
            raise ValidationError(
                f"Unknown scale_mode '{self.scale_mode}'; expected one of {SCALE_MODES}."
            )
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def k(self) -> int:
        return int(self.centers.shape[0])

    @property
    def d(self) -> int:
        return int(self.centers.shape[1])

    def moved(self, centers: np.ndarray) -> "AnchorSet":
        return AnchorSet(centers, self.alpha, self.scale_mode)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "alpha": self.alpha,
            "scale_mode": self.scale_mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnchorSet":
        try:
            return cls(
                centers=np.array(data["centers"], dtype=np.float64),
                alpha=float(data["alpha"]),
                scale_mode=data.get("scale_mode", "raw"),
            )
        except KeyError as e:
            raise ValidationError(f"Anchor JSON is missing key {e}.") from e


@dataclass(frozen=True)
class SoftAssignment:
    """n×k membership matrix p_ij and the masses p_j."""
    matrix: np.ndarray
    masses: np.ndarray
    alpha_eff: float


@dataclass(frozen=True)
class EntropyReport:
    value: float
    normalized: bool = True
    grad_points: np.ndarray | None = None
    grad_params: np.ndarray | dict | None = None


@dataclass(frozen=True)
class StochasticMatrix:
    """Rows are probability distributions (entries ≥ 0, row sums 1 within 1e-9)."""
    rows: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.rows, dtype=np.float64)
        if a.ndim != 2 or a.size == 0:
            raise ValidationError(f"Stochastic matrix must be non-empty 2-D, got shape {a.shape}.")
        if not np.isfinite(a).all():
            raise ValidationError("Stochastic matrix contains non-finite entries.")
        if (a < 0).any():
            i, j = np.argwhere(a < 0)[0]
            raise ValidationError(f"Negative entry {a[i, j]} at ({i}, {j}).")
        sums = a.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > 1e-9)
        if bad.size:
            raise ValidationError(
                f"Row {int(bad[0])} sums to {sums[bad[0]]!r}, not 1 within 1e-9 "
                f"({bad.size} offending rows)."
            )
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "rows", a)


# ═══════════════════════════════════════════════════════════════════════════════
# SCALE (normalized mode)
# ═══════════════════════════════════════════════════════════════════════════════

def _sample_pairs(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Seeded pairs of lexicographic ranks, mapped back to row indices.

    Drawing ranks instead of rows keeps the sample independent of row order.
    The sample changes when two points swap rank.
    """
    n = X.shape[0]
    order = np.lexsort(X.T[::-1])
    rng = derive_rng(0, n)
    i = rng.integers(0, n, SCALE_SAMPLE_PAIRS)
    j = (i + rng.integers(1, n, SCALE_SAMPLE_PAIRS)) % n
    return order[i], order[j]


def mean_sq_pairwise(X: np.ndarray) -> float:
    """Mean squared distance over pairs i<j (exact for n ≤ 2048, else a fixed pair sample)."""
    n = X.shape[0]
    if n < 2:
        return 0.0
    if n <= SCALE_SAMPLE_PAIRS:
        centered = X - X.mean(axis=0)
        return float(2.0 * np.sum(centered * centered) / (n - 1))
    i, j = _sample_pairs(X)
    diff = X[i] - X[j]
    return float(np.mean(np.sum(diff * diff, axis=1)))


def _grad_mean_sq_pairwise(X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    if n <= SCALE_SAMPLE_PAIRS:
        return 4.0 * (X - X.mean(axis=0)) / (n - 1)
    i, j = _sample_pairs(X)
    diff = 2.0 * (X[i] - X[j]) / SCALE_SAMPLE_PAIRS
    grad = np.zeros_like(X)
    np.add.at(grad, i, diff)
    np.add.at(grad, j, -diff)
    return grad


def effective_alpha(S: PointSet, anchors: AnchorSet) -> tuple[float, float | None]:
    """(alpha_eff, msd) for the anchor's scale mode; msd is None in raw mode."""
    if anchors.scale_mode == "raw":
        return anchors.alpha, None
    msd = mean_sq_pairwise(S.points)
    if not msd > 0:
        raise ValidationError(
            "degenerate scale: all points coincide, so the mean squared pairwise "
            "distance is 0 and normalized mode is undefined."
        )
    return anchors.alpha / msd, msd


# ═══════════════════════════════════════════════════════════════════════════════
# SOFT ASSIGNMENTS AND H_diff
# ═══════════════════════════════════════════════════════════════════════════════

def _check_compatible(S: PointSet, anchors: AnchorSet) -> None:
    if anchors.d != S.d:
        raise ValidationError(
            f"Dimension mismatch: points have d={S.d}, anchors have d={anchors.d}."
        )


def compute_soft_assignments(S: PointSet, anchors: AnchorSet) -> SoftAssignment:
    _check_compatible(S, anchors)
    a, _ = effective_alpha(S, anchors)
    D = cdist(S.points, anchors.centers, "sqeuclidean")
    z = -a * D
    logp = z - logsumexp(z, axis=1, keepdims=True)
    P = np.maximum(np.exp(logp), PROB_FLOOR)
    masses = P.sum(axis=0) / S.n
    return SoftAssignment(matrix=P, masses=masses, alpha_eff=a)


def grad_h_diff(S: PointSet, anchors: AnchorSet) -> tuple[np.ndarray, np.ndarray]:
    """Exact chain-rule gradients (dH/dpoints, dH/danchors)."""
    _check_compatible(S, anchors)
    X, C = S.points, anchors.centers
    n = S.n
    a, msd = effective_alpha(S, anchors)
    D = cdist(X, C, "sqeuclidean")
    z = -a * D
    P = np.exp(z - logsumexp(z, axis=1, keepdims=True))
    q = P.sum(axis=0) / n
    g = -(np.log(np.maximum(q, PROB_FLOOR)) + 1.0)

    # dH/dz_ij through the row softmax
    U = P * (g[None, :] - (P @ g)[:, None]) / n
    row = U.sum(axis=1)
    col = U.sum(axis=0)
    grad_points = -2.0 * a * (row[:, None] * X - U @ C)
    grad_anchors = 2.0 * a * (U.T @ X - col[:, None] * C)

    if msd is not None:
        dH_da = -float(np.sum(U * D))
        grad_points = grad_points - dH_da * (a / msd) * _grad_mean_sq_pairwise(X)

    for name, grad in (("point", grad_points), ("anchor", grad_anchors)):
        bad = ~np.isfinite(grad)
        if bad.any():
            idx = int(np.argwhere(bad)[0][0])
            raise NumericalError(f"Non-finite H_diff gradient at {name} index {idx}.", index=idx)
    return grad_points, grad_anchors


def h_diff(S: PointSet, anchors: AnchorSet, with_grad: bool = False) -> EntropyReport:
    sa = compute_soft_assignments(S, anchors)
    value = entropy_of_masses(sa.masses)
    if not with_grad:
        return EntropyReport(value=value)
    gp, ga = grad_h_diff(S, anchors)
    return EntropyReport(value=value, grad_points=gp, grad_params=ga)


def closed_form_anchor_gradient(S: PointSet, anchors: AnchorSet) -> np.ndarray:
    """Closed-form candidate alpha * sum_i p_ij (p_ij - p_j)(x_i - c_j); diagnostic only."""
    sa = compute_soft_assignments(S, anchors)
    P, q = sa.matrix, sa.masses
    W = P * (P - q[None, :])
    return anchors.alpha * (W.T @ S.points - W.sum(axis=0)[:, None] * anchors.centers)


def centroid_fixed_point_residual(S: PointSet, anchors: AnchorSet) -> np.ndarray:
    """||c_j - weighted centroid||, weights p_ij^2."""
    sa = compute_soft_assignments(S, anchors)
    W = sa.matrix ** 2
    centroids = (W.T @ S.points) / W.sum(axis=0)[:, None]
    return np.linalg.norm(anchors.centers - centroids, axis=1)


def discrete_limit_entropy(S: PointSet, anchors: AnchorSet) -> EntropyReport:
    """Entropy of the nearest-anchor hard assignment (ties → lowest index)."""
    _check_compatible(S, anchors)
    D = cdist(S.points, anchors.centers, "sqeuclidean")
    labels = np.argmin(D, axis=1)
    masses = np.bincount(labels, minlength=anchors.k) / S.n
    return EntropyReport(value=entropy_of_masses(masses))


def hard_labels(S: PointSet, anchors: AnchorSet) -> np.ndarray:
    _check_compatible(S, anchors)
    return np.argmin(cdist(S.points, anchors.centers, "sqeuclidean"), axis=1)


# ═══════════════════════════════════════════════════════════════════════════════
# ANCHOR FITTING
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AnchorFit:
    anchors: AnchorSet
    trace: list[float]
    converged: bool
    grad_norm: float
    iterations: int


def init_anchors(S: PointSet, k: int, init: str = "kmeanspp", seed: int = 0) -> np.ndarray:
    """k-means++ (D² sampling over data points) or uniform-in-bounding-box centres."""
    if not 1 <= k <= S.n:
        raise ValidationError(f"Anchor count must satisfy 1 ≤ k ≤ n={S.n}, got k={k}.")
    rng = derive_rng(seed)
    X = S.points
    if init == "random":
        lo, hi = X.min(axis=0), X.max(axis=0)
        return lo + (hi - lo) * rng.random((k, S.d))
    if init != "kmeanspp":
        raise ValidationError(f"Unknown anchor init '{init}'; expected 'kmeanspp' or 'random'.")

    chosen = [int(rng.integers(S.n))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(S.n, p=d2 / total))
        else:
            idx = int(rng.integers(S.n))
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return X[chosen].copy()


def fit_anchors(
    S: PointSet,
    k: int,
    alpha: float = 10.0,
    init: str = "kmeanspp",
    steps: int = 50,
    lr: float = 0.05,
    scale_mode: str = "raw",
    seed: int = 0,
    warm_start: AnchorSet | None = None,
) -> AnchorFit:
    """Gradient descent on anchor positions minimizing H_diff.

    Steps that would raise H_diff are halved (up to 20 times); if no halving
    helps the descent stops. The trace holds H_diff at the start and after
    every accepted step, so it is non-increasing.
    """
    if steps < 0:
        raise ValidationError(f"steps must be ≥ 0, got {steps}.")
    if not lr > 0:
        raise ValidationError(f"lr must be > 0, got {lr}.")
    if warm_start is not None:
        anchors = warm_start
        if anchors.k > S.n:
            raise ValidationError(f"Anchor count must satisfy 1 ≤ k ≤ n={S.n}, got k={anchors.k}.")
    else:
        anchors = AnchorSet(init_anchors(S, k, init, seed), alpha, scale_mode)

    value = h_diff(S, anchors).value
    trace = [value]
    grad_norm = float("nan")
    converged = False
    iterations = 0

    for step in range(steps):
        _, grad = grad_h_diff(S, anchors)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < 1e-8:
            converged = True
            break

        rate = lr
        accepted = False
        for _ in range(21):
            candidate = anchors.moved(anchors.centers - rate * grad)
            new_value = h_diff(S, candidate).value
            if not math.isfinite(new_value):
                raise NumericalError(f"H_diff became non-finite at anchor step {step}.", step=step)
            if new_value <= value:
                accepted = True
                break
            rate *= 0.5
        if not accepted:
            logger.debug(f"fit_anchors: no descent after 20 halvings at step {step}; stopping")
            break

        anchors, value = candidate, new_value
        trace.append(value)
        iterations = step + 1

    if steps == 0 or (not converged and iterations == steps):
        _, grad = grad_h_diff(S, anchors)
        grad_norm = float(np.linalg.norm(grad))
        converged = grad_norm < 1e-8

    logger.debug(
        f"fit_anchors k={anchors.k}: H {trace[0]:.6f} → {trace[-1]:.6f} "
        f"in {iterations} steps (grad norm {grad_norm:.3g})"
    )
    return AnchorFit(anchors, trace, converged, grad_norm, iterations)


# ═══════════════════════════════════════════════════════════════════════════════
# ELBOW SELECTION
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class ElbowResult:
    k: int
    curve: dict[int, float]
    bends: dict[int, float] = field(default_factory=dict)
    no_elbow: bool = False
    weak_curvature: bool = False


def _bend_strength(h_prev: float, h: float, h_next: float) -> float:
    before = h - h_prev
    after = h_next - h
    return (before - after) / max(abs(before), 1e-12)


def select_k_elbow(
    S: PointSet,
    k_range: Sequence[int],
    alpha: float = 10.0,
    init: str = "kmeanspp",
    steps: int = 50,
    lr: float = 0.05,
    scale_mode: str = "raw",
    seed: int = 0,
) -> ElbowResult:
    """Pick k at the sharpest concave bend of the H_diff-vs-k curve.

    The bend at k is -(H(k+1) - 2 H(k) + H(k-1)). A curve without a positive
    bend is flagged no-elbow and the smallest k is returned. The chosen bend
    is flagged weak when its relative slope drop is within 0.25 of the drop a
    structureless log(k) curve shows at the same k.
    """
    lo, hi = int(k_range[0]), int(k_range[-1])
    if lo > hi or lo < 1:
        raise ValidationError(f"empty k range [{lo}, {hi}].")
    if hi > S.n:
        raise ValidationError(f"k range [{lo}, {hi}] exceeds n={S.n}.")

    curve = {
        k: fit_anchors(S, k, alpha, init, steps, lr, scale_mode, seed).trace[-1]
        for k in range(lo, hi + 1)
    }
    if hi - lo + 1 < 3:
        return ElbowResult(k=lo, curve=curve, no_elbow=True)

    bends = {
        k: -(curve[k + 1] - 2.0 * curve[k] + curve[k - 1])
        for k in range(lo + 1, hi)
    }
    best = max(bends, key=lambda k: (bends[k], -k))
    if bends[best] <= 1e-12:
        return ElbowResult(k=lo, curve=curve, bends=bends, no_elbow=True)

    strength = _bend_strength(curve[best - 1], curve[best], curve[best + 1])
    reference = _bend_strength(math.log(best - 1), math.log(best), math.log(best + 1))
    weak = strength < reference + 0.25
    return ElbowResult(k=best, curve=curve, bends=bends, weak_curvature=weak)


# ═══════════════════════════════════════════════════════════════════════════════
# ROW ENTROPY
# ═══════════════════════════════════════════════════════════════════════════════

def row_entropy_sum(
    A: StochasticMatrix,
    with_grad: bool = False,
    weight: float = 1.0,
) -> tuple[float, np.ndarray | None]:
    """weight * sum_i H(A_i,:) with 0 log 0 = 0.

    The gradient -(log a + 1) is reported on strictly positive entries; zero
    entries, where the derivative is unbounded, carry 0.
    """
    rows = A.rows
    positive = rows > 0
    logs = np.log(np.where(positive, rows, 1.0))
    value = float(-weight * np.sum(np.where(positive, rows * logs, 0.0)))
    if not with_grad:
        return value, None
    grad = np.where(positive, -weight * (logs + 1.0), 0.0)
    return value, grad
