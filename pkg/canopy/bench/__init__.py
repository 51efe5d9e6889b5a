"""Benchmark runners, statistics, CSV records and SVG figures."""

from .figures import emit_svg_scatter
from .records import (
    ABLATION_HEADER,
    BENCH_HEADER,
    CORRELATION_HEADER,
    MAXIMA_HEADER,
    BenchRecord,
)
from .runners import (
    BenchSettings,
    run_ablation,
    run_correlation,
    run_speedup_bench,
)
from .stats import StatsSummary, ci95, mean_std, paired_ttest, r_squared

__all__ = [
    "BENCH_HEADER", "MAXIMA_HEADER", "ABLATION_HEADER", "CORRELATION_HEADER",
    "BenchRecord", "BenchSettings", "StatsSummary",
    "run_speedup_bench", "run_correlation", "run_ablation",
    "paired_ttest", "r_squared", "mean_std", "ci95",
    "emit_svg_scatter",
]
