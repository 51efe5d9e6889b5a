"""
soil/generate.py

Synthetic dataset generators and the seed discipline shared by every runner.

Seeds are never drawn from shared global state: a master seed and a tuple of
counters (trial index, instance index, ...) are folded into one
numpy SeedSequence, so each stream is reproducible on its own.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ValidationError
from .pointset import PointSet

logger = logging.getLogger("soil.generate")

DATASET_KINDS = ("uniform2d", "parabolic2d", "blobs2d", "blobs3d", "pareto3d")


def derive_rng(seed: int, *counters: int) -> np.random.Generator:
    """Counter-based stream derivation: (seed, counters...) → independent Generator."""
    if seed < 0 or any(c < 0 for c in counters):
        raise ValidationError(f"Seeds and counters must be non-negative, got {(seed, *counters)}.")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, counters)]))


def derive_seed(seed: int, *counters: int) -> int:
    """A non-negative integer seed for the (seed, counters...) stream."""
    if seed < 0 or any(c < 0 for c in counters):
        raise ValidationError(f"Seeds and counters must be non-negative, got {(seed, *counters)}.")
    state = np.random.SeedSequence([int(seed), *map(int, counters)]).generate_state(1)
    return int(state[0] & 0x7FFFFFFF)


# ═══════════════════════════════════════════════════════════════════════════════
# DATASET SPEC
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class DatasetSpec:
    """What to generate. `params` holds kind-specific knobs (sigma, blobs, spread, noise, box)."""
    kind: str
    n: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ValidationError(
                f"Unknown dataset kind '{self.kind}'.\n"
                f"  Available kinds: {', '.join(DATASET_KINDS)}"
            )
        if self.n < 1:
            raise ValidationError(f"Dataset size must be ≥ 1, got n={self.n}.")
        if self.seed < 0:
            raise ValidationError(f"Seed must be non-negative, got {self.seed}.")

    @property
    def dataset_id(self) -> str:
        extras = "".join(f"_{k}{v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}{extras}"

    def with_seed(self, seed: int) -> "DatasetSpec":
        return DatasetSpec(self.kind, self.n, seed, dict(self.params))


@dataclass(frozen=True)
class Dataset:
    """A generated point set, with ground-truth cluster labels for blob kinds."""
    spec: DatasetSpec
    points: PointSet
    labels: np.ndarray | None = None


# ═══════════════════════════════════════════════════════════════════════════════
# GENERATORS
# ═══════════════════════════════════════════════════════════════════════════════

def _box(params: dict) -> tuple[float, float]:
    lo, hi = params.get("box", (0.0, 1.0))
    if not hi > lo:
        raise ValidationError(f"Domain box must satisfy low < high, got {(lo, hi)}.")
    return float(lo), float(hi)


def _uniform(spec: DatasetSpec, rng: np.random.Generator) -> Dataset:
    lo, hi = _box(spec.params)
    pts = lo + (hi - lo) * rng.random((spec.n, 2))
    return Dataset(spec, PointSet(pts))


def _parabolic(spec: DatasetSpec, rng: np.random.Generator) -> Dataset:
    sigma = float(spec.params.get("sigma", 0.01))
    if sigma < 0:
        raise ValidationError(f"parabolic2d noise sigma must be ≥ 0, got {sigma}.")
    x = rng.random(spec.n)
    y = x * x
    if sigma > 0:
        y = y + rng.normal(0.0, sigma, spec.n)
    return Dataset(spec, PointSet(np.column_stack([x, y])))


def _blobs(spec: DatasetSpec, rng: np.random.Generator, d: int) -> Dataset:
    k = int(spec.params.get("blobs", 16))
    spread = float(spec.params.get("spread", 0.01))
    if k < 1 or k > spec.n:
        raise ValidationError(f"Blob count must be in [1, n={spec.n}], got {k}.")
    if spread < 0:
        raise ValidationError(f"Blob spread must be ≥ 0, got {spread}.")
    lo, hi = _box(spec.params)

    # Centres on a regular grid, one blob per cell; spread is relative to spacing.
    per_axis = max(1, math.ceil(k ** (1.0 / d) - 1e-12))
    spacing = (hi - lo) / per_axis
    cells = np.array(np.unravel_index(np.arange(per_axis ** d), (per_axis,) * d)).T
    chosen = np.sort(rng.permutation(len(cells))[:k])
    centers = lo + (cells[chosen] + 0.5) * spacing

    sizes = np.full(k, spec.n // k, dtype=np.int64)
    sizes[: spec.n % k] += 1
    labels = np.repeat(np.arange(k), sizes)
    pts = centers[labels] + rng.normal(0.0, spread * spacing, (spec.n, d))

    order = rng.permutation(spec.n)
    return Dataset(spec, PointSet(pts[order]), labels[order].astype(np.int64))


def _pareto(spec: DatasetSpec, rng: np.random.Generator) -> Dataset:
    noise = float(spec.params.get("noise", 0.05))
    if noise < 0:
        raise ValidationError(f"pareto3d noise must be ≥ 0, got {noise}.")
    # Random concave frontier: the unit p-sphere in the positive orthant.
    p = float(spec.params.get("p", rng.uniform(1.5, 3.0)))
    v = np.abs(rng.normal(size=(spec.n, 3))) + 1e-12
    v = v / np.power(np.sum(v ** p, axis=1, keepdims=True), 1.0 / p)
    if noise > 0:
        v = v - rng.exponential(noise, size=(spec.n, 3))
    return Dataset(spec, PointSet(v))


def gen_dataset(spec: DatasetSpec) -> Dataset:
    """Generate the dataset described by spec; same spec → byte-identical points."""
    rng = derive_rng(spec.seed)
    if spec.kind == "uniform2d":
        data = _uniform(spec, rng)
    elif spec.kind == "parabolic2d":
        data = _parabolic(spec, rng)
    elif spec.kind == "blobs2d":
        data = _blobs(spec, rng, 2)
    elif spec.kind == "blobs3d":
        data = _blobs(spec, rng, 3)
    else:
        data = _pareto(spec, rng)
    logger.debug(f"Generated {spec.dataset_id} n={spec.n} seed={spec.seed}")
    return data
