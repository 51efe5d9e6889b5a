"""
canopy/bench/stats.py

Summary statistics for bench runs: mean ± std, 95% normal-approximation
confidence intervals, a paired t-test, and least-squares R².
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate, stats

from soil.errors import ValidationError

Z_95 = 1.96


@dataclass(frozen=True)
class StatsSummary:
    t: float | None = None
    df: int | None = None
    p_value: float | None = None
    r_squared: float | None = None
    r_squared_raw: float | None = None
    n: int = 0
    degenerate: bool = False
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "df": self.df,
            "p_value": self.p_value,
            "r_squared": self.r_squared,
            "r_squared_raw": self.r_squared_raw,
            "n": self.n,
            "degenerate": self.degenerate,
            "note": self.note,
        }

    def warnings(self, primitive: str = "stats") -> list[dict]:
        if not self.degenerate:
            return []
        return [{"level": "warning", "message": f"{primitive}: degenerate statistic ({self.note})"}]


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("mean_std needs at least one value.")
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def ci95(values: Sequence[float]) -> tuple[float, float]:
    mean, std = mean_std(values)
    half = Z_95 * std / math.sqrt(len(values))
    return mean - half, mean + half


def two_sided_p(t: float, df: int) -> float:
    """P(|T| ≥ |t|) for Student's t, integrating the density over the upper tail."""
    tail, _ = integrate.quad(lambda x: stats.t.pdf(x, df), abs(t), math.inf)
    return float(min(1.0, max(0.0, 2.0 * tail)))


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> StatsSummary:
    """Paired t-test on a − b.

    Zero spread in the differences has two conventions: all differences zero
    gives t = 0, p = 1; a constant nonzero difference gives p = 0 flagged
    degenerate.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError(f"paired_ttest needs equal-length series, got {a.shape} and {b.shape}.")
    n = int(a.size)
    if n < 2:
        raise ValidationError(f"paired_ttest needs at least 2 pairs, got {n}.")

    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return StatsSummary(t=0.0, df=df, p_value=1.0, n=n, degenerate=True,
                                note="all differences zero")
        return StatsSummary(t=math.copysign(math.inf, mean), df=df, p_value=0.0, n=n,
                            degenerate=True, note="zero variance with nonzero mean")

    t = mean / (sd / math.sqrt(n))
    return StatsSummary(t=t, df=df, p_value=two_sided_p(t, df), n=n)


def r_squared(x: Sequence[float], y: Sequence[float]) -> StatsSummary:
    """Least-squares R² of y on x.

    `r_squared_raw` keeps the sign of the correlation (r·|r|); `r_squared` is
    that value clamped at 0.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValidationError(f"r_squared needs two equal-length series of ≥ 2 values, got {x.shape}, {y.shape}.")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return StatsSummary(r_squared=0.0, r_squared_raw=0.0, n=int(x.size), degenerate=True,
                            note="constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    raw = r * abs(r)
    return StatsSummary(r_squared=max(0.0, raw), r_squared_raw=raw, n=int(x.size))
