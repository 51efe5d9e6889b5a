"""
roots/restructure.py

Per-instance restructuring: gradient descent on a displacement field Δ so that
S′ = S + Δ has low entropy while staying close to S.

    total = chamfer(S, S′) + λ·entropy(S′) + μ·mean_i ||Δ_i||²

Δ starts at zero. Each step uses a cosine-annealed rate and is halved (up to
20 times) until the total does not increase, so the trace is non-increasing.
Estimator parameters (anchors or hyperplanes) are refit every `refit_every`
steps with a warm start; a refit only lowers the entropy term.

Step scale: with `step_scale="per_point"` (default) the descent runs on
n·total, so `lr` is a per-point step and the motion of a point does not
shrink as n grows. `step_scale="mean"` descends the mean-form total as is.

Hull guard: with `hull_guard=True` (default) the vertices of conv(S) never
move and a point whose step would leave conv(S) keeps its previous
position for that step. conv(S′) then equals conv(S) exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, fields
from typing import Any

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from soil.errors import NumericalError, ValidationError
from soil.pointset import PointSet

from .entropy import AnchorSet, default_k, fit_anchors, grad_h_diff, h_diff
from .geometry.metrics import chamfer_with_grad
from .halfspace import HalfspaceSet, enumerate_cells, h_diff_half, h_soft

logger = logging.getLogger("roots.restructure")

ESTIMATORS = ("ball", "halfspace")
STEP_SCALES = ("per_point", "mean")
MAX_HALVINGS = 20


# ═══════════════════════════════════════════════════════════════════════════════
# CONFIG AND RESULT TYPES
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class RestructureConfig:
    lam: float = 0.1
    mu: float = 0.01
    estimator: str = "ball"
    k: int | None = None
    alpha: float = 10.0
    scale_mode: str = "raw"
    anchor_init: str = "kmeanspp"
    anchor_steps: int = 50
    anchor_lr: float = 0.05
    m: int = 2
    tau: float = 0.25
    halfspace_init: str = "principal"
    refit_every: int = 25
    refit_steps: int = 10
    fixed_anchors: bool = False
    steps: int = 500
    lr: float = 1e-3
    step_scale: str = "per_point"
    hull_guard: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0 or self.mu < 0:
            raise ValidationError(f"lambda and mu must be ≥ 0, got lambda={self.lam}, mu={self.mu}.")
        if self.estimator not in ESTIMATORS:
            raise ValidationError(
                f"Unknown estimator '{self.estimator}'; expected one of {ESTIMATORS}."
            )
        if self.steps < 0:
            raise ValidationError(f"steps must be ≥ 0, got {self.steps}.")
        if not self.lr > 0:
            raise ValidationError(f"lr must be > 0, got {self.lr}.")
        if self.step_scale not in STEP_SCALES:
            raise ValidationError(
                f"Unknown step_scale '{self.step_scale}'; expected one of {STEP_SCALES}."
            )
        if self.refit_every < 1:
            raise ValidationError(f"refit_every must be ≥ 1, got {self.refit_every}.")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RestructureConfig":
        """Build from merged config keys; 'lambda' maps to `lam`, unknown keys are ignored."""
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = "lam" if key == "lambda" else key
            if name in known and value is not None:
                kwargs[name] = value
        if kwargs.get("k") == "auto":
            kwargs.pop("k")
        return cls(**kwargs)


@dataclass(frozen=True)
class LossTerms:
    chamfer: float
    entropy: float
    stability: float
    total: float


@dataclass(frozen=True)
class TraceRow:
    step: int
    chamfer: float
    entropy: float
    stability: float
    total: float
    lr: float

    def as_row(self) -> list:
        return [self.step, self.chamfer, self.entropy, self.stability, self.total, self.lr]


TRACE_HEADER = ["step", "chamfer", "entropy", "stability", "total", "lr"]


@dataclass(frozen=True)
class RestructureResult:
    output: PointSet
    displacement: np.ndarray
    trace: list[TraceRow]
    iterations_run: int
    estimator_params: AnchorSet | HalfspaceSet | None = None
    stopped_early: bool = False
    refits: int = 0


# ═══════════════════════════════════════════════════════════════════════════════
# ESTIMATORS
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class _BallEstimator:
    cfg: RestructureConfig
    anchors: AnchorSet | None = None

    def fit(self, S: PointSet) -> None:
        k = self.cfg.k if self.cfg.k is not None else default_k(S.n)
        self.anchors = fit_anchors(
            S, k, alpha=self.cfg.alpha, init=self.cfg.anchor_init, steps=self.cfg.anchor_steps,
            lr=self.cfg.anchor_lr, scale_mode=self.cfg.scale_mode, seed=self.cfg.seed,
        ).anchors

    def refit(self, S: PointSet) -> None:
        self.anchors = fit_anchors(
            S, self.anchors.k, steps=self.cfg.refit_steps, lr=self.cfg.anchor_lr,
            warm_start=self.anchors,
        ).anchors

    def value(self, S: PointSet) -> float:
        return h_diff(S, self.anchors).value

    def grad_points(self, S: PointSet) -> np.ndarray:
        return grad_h_diff(S, self.anchors)[0]

    @property
    def params(self) -> AnchorSet | None:
        return self.anchors


@dataclass
class _HalfspaceEstimator:
    cfg: RestructureConfig
    halfspaces: HalfspaceSet | None = None

    def fit(self, S: PointSet) -> None:
        self.halfspaces = h_diff_half(
            S, m=self.cfg.m, tau=self.cfg.tau, strategy=self.cfg.halfspace_init,
            steps=self.cfg.anchor_steps, lr=self.cfg.anchor_lr, seed=self.cfg.seed,
        ).halfspaces

    def refit(self, S: PointSet) -> None:
        self.halfspaces = h_diff_half(
            S, steps=self.cfg.refit_steps, lr=self.cfg.anchor_lr, warm_start=self.halfspaces,
        ).halfspaces

    def value(self, S: PointSet) -> float:
        return h_soft(S, self.halfspaces, enumerate_cells(S, self.halfspaces)).value

    def grad_points(self, S: PointSet) -> np.ndarray:
        G = enumerate_cells(S, self.halfspaces)
        return h_soft(S, self.halfspaces, G, with_grad=True).grad_points

    @property
    def params(self) -> HalfspaceSet | None:
        return self.halfspaces


def _make_estimator(cfg: RestructureConfig):
    return _BallEstimator(cfg) if cfg.estimator == "ball" else _HalfspaceEstimator(cfg)


# ═══════════════════════════════════════════════════════════════════════════════
# HULL GUARD
# ═══════════════════════════════════════════════════════════════════════════════

class _HullGuard:
    """Pins the hull vertices of S and keeps every other point inside conv(S)."""

    def __init__(self, S: PointSet):
        self.pinned = np.zeros(S.n, dtype=bool)
        self.region: Delaunay | None = None
        if S.n <= S.d:
            return
        try:
            hull = ConvexHull(S.points)
            self.region = Delaunay(S.points[hull.vertices])
        except QhullError:
            logger.debug("restructure: degenerate input hull; guard disabled")
            return
        self.pinned[hull.vertices] = True

    @property
    def active(self) -> bool:
        return self.region is not None

    def restrict(self, S: PointSet, delta: np.ndarray, candidate: np.ndarray) -> np.ndarray:
        """Rows of `candidate` that would leave conv(S) fall back to `delta`."""
        if self.region is None:
            return candidate
        moved = np.flatnonzero(np.any(candidate != delta, axis=1))
        if moved.size == 0:
            return candidate
        outside = self.region.find_simplex(S.points[moved] + candidate[moved]) < 0
        if outside.any():
            candidate = candidate.copy()
            rows = moved[outside]
            candidate[rows] = delta[rows]
        return candidate


# ═══════════════════════════════════════════════════════════════════════════════
# LOSS
# ═══════════════════════════════════════════════════════════════════════════════

def _terms(S: PointSet, S2: PointSet, cfg: RestructureConfig, estimator) -> LossTerms:
    ch, _ = chamfer_with_grad(S, S2)
    ent = estimator.value(S2)
    stab = float(np.sum((S2.points - S.points) ** 2) / S.n)
    return LossTerms(ch, ent, stab, ch + cfg.lam * ent + cfg.mu * stab)


def loss_eval(S: PointSet, S2: PointSet, cfg: RestructureConfig,
              estimator_params: AnchorSet | HalfspaceSet | None = None) -> LossTerms:
    """The three loss terms and their weighted total.

    Without explicit estimator parameters, the estimator is fit on S2 first.
    """
    if S.points.shape != S2.points.shape:
        raise ValidationError(
            f"loss_eval needs point sets of equal shape, got {S.points.shape} and {S2.points.shape}."
        )
    estimator = _make_estimator(cfg)
    if estimator_params is None:
        estimator.fit(S2)
    elif isinstance(estimator, _BallEstimator) and isinstance(estimator_params, AnchorSet):
        estimator.anchors = estimator_params
    elif isinstance(estimator, _HalfspaceEstimator) and isinstance(estimator_params, HalfspaceSet):
        estimator.halfspaces = estimator_params
    else:
        raise ValidationError(
            f"Estimator parameters of type {type(estimator_params).__name__} do not match "
            f"estimator '{cfg.estimator}'."
        )
    return _terms(S, S2, cfg, estimator)


def _gradient(S: PointSet, S2: PointSet, delta: np.ndarray, cfg: RestructureConfig,
              estimator) -> np.ndarray:
    _, g = chamfer_with_grad(S, S2)
    if cfg.lam > 0:
        g = g + cfg.lam * estimator.grad_points(S2)
    if cfg.mu > 0:
        g = g + cfg.mu * 2.0 * delta / S.n
    return g


def _cosine_lr(lr: float, step: int, steps: int) -> float:
    return lr * 0.5 * (1.0 + math.cos(math.pi * step / steps))


# ═══════════════════════════════════════════════════════════════════════════════
# OPTIMIZER
# ═══════════════════════════════════════════════════════════════════════════════

def restructure(S: PointSet, cfg: RestructureConfig | None = None) -> RestructureResult:
    cfg = cfg or RestructureConfig()
    if S.n < 2:
        return RestructureResult(S, np.zeros_like(S.points), [], 0)

    estimator = _make_estimator(cfg)
    estimator.fit(S)
    guard = _HullGuard(S) if cfg.hull_guard else None
    scale = float(S.n) if cfg.step_scale == "per_point" else 1.0

    delta = np.zeros_like(S.points)
    current = S
    terms = _terms(S, current, cfg, estimator)
    trace = [TraceRow(0, terms.chamfer, terms.entropy, terms.stability, terms.total, cfg.lr)]
    iterations = 0
    refits = 0
    stopped_early = False

    for step in range(1, cfg.steps + 1):
        if step > 1 and (step - 1) % cfg.refit_every == 0 and not cfg.fixed_anchors:
            estimator.refit(current)
            terms = _terms(S, current, cfg, estimator)
            refits += 1
            logger.debug(f"restructure: refit at step {step}, entropy {terms.entropy:.6f}")

        rate = _cosine_lr(cfg.lr, step - 1, cfg.steps)
        grad = _gradient(S, current, delta, cfg, estimator) * scale
        if not np.isfinite(grad).all():
            raise NumericalError(f"Non-finite restructure gradient at step {step}.", step=step)
        if guard is not None:
            grad[guard.pinned] = 0.0
        if float(np.max(np.abs(grad))) == 0.0:
            logger.debug(f"restructure: zero gradient at step {step}; stopping")
            stopped_early = True
            break

        accepted = False
        trial = rate
        for _ in range(MAX_HALVINGS + 1):
            cand_delta = delta - trial * grad
            if guard is not None:
                cand_delta = guard.restrict(S, delta, cand_delta)
            candidate = S.translated(cand_delta)
            cand_terms = _terms(S, candidate, cfg, estimator)
            if not math.isfinite(cand_terms.total):
                raise NumericalError(f"Non-finite restructure loss at step {step}.", step=step)
            if cand_terms.total <= terms.total:
                accepted = True
                break
            trial *= 0.5
        if not accepted:
            logger.debug(f"restructure: no descent after {MAX_HALVINGS} halvings at step {step}")
            stopped_early = True
            break

        delta, current, terms = cand_delta, candidate, cand_terms
        trace.append(TraceRow(step, terms.chamfer, terms.entropy, terms.stability, terms.total, trial))
        iterations = step

    logger.info(
        f"restructure n={S.n} estimator={cfg.estimator}: total {trace[0].total:.6f} → "
        f"{trace[-1].total:.6f} in {iterations} steps ({refits} refits)"
    )
    return RestructureResult(current, delta, trace, iterations, estimator.params, stopped_early, refits)
