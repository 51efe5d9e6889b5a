"""
canopy/bench/records.py

Row types and fixed CSV headers for bench, maxima, ablation and correlation
outputs. Header order is part of the output contract (schema_version 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from soil.io import write_csv_rows

from .stats import ci95, mean_std

BENCH_HEADER = [
    "dataset", "method", "n", "seed",
    "op_count_mean", "op_count_std",
    "runtime_ns_mean", "runtime_ns_std",
    "speedup", "hull_error_pct", "hausdorff",
    "entropy_before", "entropy_after", "preprocess_ns",
]

MAXIMA_HEADER = [
    "dataset", "method", "n", "seed",
    "op_count_mean", "op_count_std",
    "runtime_ns_mean", "runtime_ns_std",
    "speedup", "maxima_f1", "preprocess_ns",
]

ABLATION_HEADER = [
    "factor", "value", "method", "n", "seeds",
    "speedup_mean", "speedup_ci_low", "speedup_ci_high",
    "hausdorff_mean", "hausdorff_std",
    "hull_error_pct_mean", "entropy_after_mean",
]

CORRELATION_HEADER = ["instance", "blobs", "n", "seed", "h_diff", "oracle_entropy"]


def _mean_or_none(values: Sequence[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return mean_std(present)[0] if present else None


@dataclass
class BenchRecord:
    """One dataset × method cell, with the per-trial series kept for tests."""
    dataset: str
    method: str
    n: int
    seed: int
    op_counts: list[int] = field(default_factory=list)
    runtimes_ns: list[int] = field(default_factory=list)
    hull_errors: list[float | None] = field(default_factory=list)
    hausdorffs: list[float | None] = field(default_factory=list)
    entropies_before: list[float | None] = field(default_factory=list)
    entropies_after: list[float | None] = field(default_factory=list)
    preprocess_ns: list[int] = field(default_factory=list)
    f1_scores: list[float] = field(default_factory=list)
    speedup: float | None = None

    @property
    def trials(self) -> int:
        return len(self.op_counts)

    @property
    def op_count_mean(self) -> float:
        return mean_std(self.op_counts)[0]

    @property
    def op_count_std(self) -> float:
        return mean_std(self.op_counts)[1]

    @property
    def runtime_ns_mean(self) -> float | None:
        return mean_std(self.runtimes_ns)[0] if self.runtimes_ns else None

    @property
    def runtime_ns_std(self) -> float | None:
        return mean_std(self.runtimes_ns)[1] if self.runtimes_ns else None

    @property
    def hull_error_pct(self) -> float | None:
        return _mean_or_none(self.hull_errors)

    @property
    def hausdorff(self) -> float | None:
        return _mean_or_none(self.hausdorffs)

    @property
    def entropy_before(self) -> float | None:
        return _mean_or_none(self.entropies_before)

    @property
    def entropy_after(self) -> float | None:
        return _mean_or_none(self.entropies_after)

    @property
    def preprocess_ns_mean(self) -> float | None:
        return mean_std(self.preprocess_ns)[0] if self.preprocess_ns else None

    def as_row(self) -> list:
        return [
            self.dataset, self.method, self.n, self.seed,
            self.op_count_mean, self.op_count_std,
            self.runtime_ns_mean, self.runtime_ns_std,
            self.speedup, self.hull_error_pct, self.hausdorff,
            self.entropy_before, self.entropy_after, self.preprocess_ns_mean,
        ]

    def as_maxima_row(self) -> list:
        return [
            self.dataset, self.method, self.n, self.seed,
            self.op_count_mean, self.op_count_std,
            self.runtime_ns_mean, self.runtime_ns_std,
            self.speedup, _mean_or_none(self.f1_scores), self.preprocess_ns_mean,
        ]


@dataclass(frozen=True)
class AblationRow:
    factor: str
    value: object
    method: str
    n: int
    seeds: int
    speedups: tuple[float, ...]
    hausdorffs: tuple[float, ...]
    hull_errors: tuple[float, ...]
    entropies_after: tuple[float, ...]

    @property
    def speedup_mean(self) -> float:
        return mean_std(self.speedups)[0]

    def as_row(self) -> list:
        lo, hi = ci95(self.speedups)
        h_mean, h_std = mean_std(self.hausdorffs) if self.hausdorffs else (None, None)
        return [
            self.factor, self.value, self.method, self.n, self.seeds,
            self.speedup_mean, lo, hi,
            h_mean, h_std,
            _mean_or_none(list(self.hull_errors)), _mean_or_none(list(self.entropies_after)),
        ]


@dataclass(frozen=True)
class CorrelationRow:
    instance: int
    blobs: int
    n: int
    seed: int
    h_diff: float
    oracle_entropy: float

    def as_row(self) -> list:
        return [self.instance, self.blobs, self.n, self.seed, self.h_diff, self.oracle_entropy]


def write_bench_csv(path: str | Path, records: Sequence[BenchRecord], task: str = "hull") -> Path:
    if task == "maxima":
        return write_csv_rows(path, MAXIMA_HEADER, [r.as_maxima_row() for r in records])
    return write_csv_rows(path, BENCH_HEADER, [r.as_row() for r in records])


def write_ablation_csv(path: str | Path, rows: Sequence[AblationRow]) -> Path:
    return write_csv_rows(path, ABLATION_HEADER, [r.as_row() for r in rows])


def write_correlation_csv(path: str | Path, rows: Sequence[CorrelationRow]) -> Path:
    return write_csv_rows(path, CORRELATION_HEADER, [r.as_row() for r in rows])
