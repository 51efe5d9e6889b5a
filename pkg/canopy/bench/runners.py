"""
canopy/bench/runners.py

Experiment runners: the hull / maxima speedup bench, the entropy-vs-oracle
correlation run, and one-factor-at-a-time ablations.

op_count is the primary metric. Wall time is recorded only in timing mode,
where trials run sequentially after discarded warmup runs. Every trial draws
its dataset from the counter-derived stream (seed, trial), so all methods see
the same points within a trial and the t-tests are paired.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from roots.entropy import AnchorFit, AnchorSet, default_k, fit_anchors, hard_labels, init_anchors
from roots.geometry import (
    HullResult,
    MaximaResult,
    adaptive_maxima,
    chans_hull,
    hausdorff,
    hull_error_pct,
    maxima_3d,
    maxima_f1,
    monotone_chain_hull,
    partition_merge_hull,
)
from roots.oracle import generating_partition_entropy, min_entropy_arrangement
from roots.restructure import RestructureConfig, restructure
from soil.errors import ValidationError
from soil.generate import Dataset, DatasetSpec, derive_rng, derive_seed, gen_dataset
from soil.pointset import HardPartition, PointSet

from .records import AblationRow, BenchRecord, CorrelationRow
from .stats import StatsSummary, paired_ttest, r_squared

logger = logging.getLogger("canopy.bench")

HULL_METHODS = (
    "raw", "random_permutation", "heuristic_sort", "chan",
    "adaptive", "restructure+adaptive", "lambda0+adaptive",
)
MAXIMA_METHODS = ("raw", "random_permutation", "adaptive")
METRICS = ("op_count", "runtime")
ORACLE_MODES = ("generating", "arrangement_m")

GRID_KEYS = {
    "alphas": "alpha",
    "ks": "k",
    "inits": "anchor_init",
    "lambdas": "lambda",
    "mus": "mu",
    "fixed_anchors": "fixed_anchors",
    "estimators": "estimator",
}


# ═══════════════════════════════════════════════════════════════════════════════
# SETTINGS AND OUTCOMES
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class BenchSettings:
    task: str = "hull"
    trials: int = 5
    timing: bool = False
    metric: str = "op_count"
    warmup: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.task not in ("hull", "maxima"):
            raise ValidationError(f"Unknown bench task '{self.task}'; expected 'hull' or 'maxima'.")
        if self.trials < 2:
            raise ValidationError(f"Bench needs at least 2 trials for a std, got {self.trials}.")
        if self.metric not in METRICS:
            raise ValidationError(f"Unknown metric '{self.metric}'; expected one of {METRICS}.")
        if self.metric == "runtime" and not self.timing:
            raise ValidationError(
                "Speedup by runtime needs timing mode.\n"
                "  Pass --timing or set 'timing: true' in the config."
            )
        if self.warmup < 0 or self.seed < 0:
            raise ValidationError("warmup and seed must be non-negative.")

    @classmethod
    def from_params(cls, params: dict[str, Any], task: str = "hull", seed: int = 0) -> "BenchSettings":
        return cls(
            task=task,
            trials=int(params.get("trials", 5)),
            timing=bool(params.get("timing", False)),
            metric=params.get("metric", "op_count"),
            warmup=int(params.get("warmup", 3)),
            seed=seed,
        )


@dataclass
class BenchOutcome:
    records: list[BenchRecord]
    tests: dict[str, dict[str, StatsSummary]] = field(default_factory=dict)
    task: str = "hull"

    def record(self, dataset: str, method: str) -> BenchRecord:
        for r in self.records:
            if r.dataset == dataset and r.method == method:
                return r
        raise KeyError(f"No bench record for {dataset} × {method}")

    def warnings(self) -> list[dict]:
        out = []
        for dataset, per_method in self.tests.items():
            for method, summary in per_method.items():
                out.extend(summary.warnings(f"paired_ttest[{dataset}/{method}]"))
        return out

    def summary(self) -> dict:
        return {
            "task": self.task,
            "records": [
                {"dataset": r.dataset, "method": r.method, "n": r.n,
                 "op_count_mean": r.op_count_mean, "speedup": r.speedup,
                 "hull_error_pct": r.hull_error_pct,
                 "entropy_before": r.entropy_before, "entropy_after": r.entropy_after}
                for r in self.records
            ],
            "paired_ttests": {
                dataset: {method: s.to_dict() for method, s in per_method.items()}
                for dataset, per_method in self.tests.items()
            },
        }


@dataclass
class CorrelationOutcome:
    rows: list[CorrelationRow]
    stats: StatsSummary
    control: StatsSummary
    oracle_mode: str = "generating"

    def warnings(self) -> list[dict]:
        return self.stats.warnings("correlate") + self.control.warnings("correlate[control]")

    def summary(self) -> dict:
        return {
            "oracle_mode": self.oracle_mode,
            "instances": len(self.rows),
            "r_squared": self.stats.to_dict(),
            "control_r_squared": self.control.to_dict(),
        }


@dataclass
class AblationOutcome:
    rows: list[AblationRow]
    warnings: list[dict] = field(default_factory=list)

    def mean_speedup(self, factor: str, value: Any) -> float:
        """Mean speedup over every dataset row for factor=value."""
        speedups = [s for row in self.rows if row.factor == factor and row.value == value
                    for s in row.speedups]
        if not speedups:
            raise KeyError(f"No ablation row for {factor}={value}")
        return float(np.mean(speedups))

    def summary(self) -> dict:
        return {
            "rows": [
                {"factor": r.factor, "value": r.value, "n": r.n,
                 "speedup_mean": r.speedup_mean, "seeds": r.seeds}
                for r in self.rows
            ]
        }


# ═══════════════════════════════════════════════════════════════════════════════
# SHARED HELPERS
# ═══════════════════════════════════════════════════════════════════════════════

def _resolved_k(params: dict[str, Any], n: int) -> int:
    k = params.get("k", "auto")
    return default_k(n) if k in (None, "auto") else min(int(k), n)


def _fit(S: PointSet, params: dict[str, Any], seed: int, k: int | None = None) -> AnchorFit:
    return fit_anchors(
        S, k if k is not None else _resolved_k(params, S.n),
        alpha=float(params.get("alpha", 10.0)),
        init=params.get("anchor_init", "kmeanspp"),
        steps=int(params.get("anchor_steps", 50)),
        lr=float(params.get("anchor_lr", 0.05)),
        scale_mode=params.get("scale_mode", "raw"),
        seed=seed,
    )


def measured_entropy(S: PointSet, params: dict[str, Any], seed: int) -> float:
    """H_diff of S under freshly fitted anchors; the before/after yardstick."""
    return _fit(S, params, seed).trace[-1]


def _fitted_partition(S: PointSet, params: dict[str, Any], seed: int) -> HardPartition:
    return HardPartition(hard_labels(S, _fit(S, params, seed).anchors))


def _seeded_partition(S: PointSet, params: dict[str, Any], seed: int) -> HardPartition:
    """Nearest-anchor labels under the seeded anchors, before any descent on H_diff."""
    centers = init_anchors(S, _resolved_k(params, S.n), params.get("anchor_init", "kmeanspp"), seed)
    return HardPartition(hard_labels(S, AnchorSet(centers, float(params.get("alpha", 10.0)))))


def _generating_or(data: Dataset, S: PointSet, params: dict[str, Any], seed: int,
                   fallback) -> HardPartition:
    if data.labels is not None:
        return HardPartition(data.labels)
    return fallback(S, params, seed)


@dataclass(frozen=True)
class _TrialRun:
    result: HullResult | MaximaResult
    preprocess_ns: int
    index_map: np.ndarray | None = None
    entropies: tuple[float, float] | None = None


# ═══════════════════════════════════════════════════════════════════════════════
# METHODS
# ═══════════════════════════════════════════════════════════════════════════════

def _run_hull_method(method: str, data: Dataset, params: dict[str, Any], seed: int) -> _TrialRun:
    S = data.points
    started = time.perf_counter_ns()
    if method == "raw":
        return _TrialRun(monotone_chain_hull(S), 0)
    if method == "chan":
        return _TrialRun(chans_hull(S), 0)
    if method == "random_permutation":
        shuffled = S.take(derive_rng(seed, 1).permutation(S.n))
        prep = time.perf_counter_ns() - started
        return _TrialRun(monotone_chain_hull(shuffled), prep)
    if method == "heuristic_sort":
        ordered = S.take(np.lexsort((S.points[:, 1], S.points[:, 0])))
        prep = time.perf_counter_ns() - started
        return _TrialRun(monotone_chain_hull(ordered), prep)
    if method == "adaptive":
        P = _generating_or(data, S, params, seed, _seeded_partition)
        prep = time.perf_counter_ns() - started
        return _TrialRun(partition_merge_hull(S, P), prep)
    if method in ("restructure+adaptive", "lambda0+adaptive"):
        values = {**params, "seed": seed}
        if method == "lambda0+adaptive":
            values["lambda"] = 0.0
        res = restructure(S, RestructureConfig.from_dict(values))
        P = _generating_or(data, res.output, params, seed, _seeded_partition)
        prep = time.perf_counter_ns() - started
        entropies = (res.trace[0].entropy, res.trace[-1].entropy) if res.trace else None
        return _TrialRun(partition_merge_hull(res.output, P), prep, entropies=entropies)
    raise ValidationError(f"Unknown hull method '{method}'.\n  Available: {', '.join(HULL_METHODS)}")


def _run_maxima_method(method: str, data: Dataset, params: dict[str, Any], seed: int) -> _TrialRun:
    S = data.points
    S.require_dim(3, op="maxima bench")
    started = time.perf_counter_ns()
    if method == "raw":
        return _TrialRun(maxima_3d(S), 0)
    if method == "random_permutation":
        order = derive_rng(seed, 1).permutation(S.n)
        shuffled = S.take(order)
        prep = time.perf_counter_ns() - started
        return _TrialRun(maxima_3d(shuffled), prep, index_map=order)
    if method == "adaptive":
        P = _generating_or(data, S, params, seed, _fitted_partition)
        prep = time.perf_counter_ns() - started
        return _TrialRun(adaptive_maxima(S, P), prep)
    raise ValidationError(f"Unknown maxima method '{method}'.\n  Available: {', '.join(MAXIMA_METHODS)}")


# ═══════════════════════════════════════════════════════════════════════════════
# SPEEDUP BENCH
# ═══════════════════════════════════════════════════════════════════════════════

def _metric_mean(record: BenchRecord, metric: str) -> float:
    return record.op_count_mean if metric == "op_count" else record.runtime_ns_mean


def run_speedup_bench(
    datasets: Sequence[DatasetSpec],
    methods: Sequence[str],
    params: dict[str, Any],
    settings: BenchSettings,
) -> BenchOutcome:
    """Run every dataset × method for `settings.trials` seeded trials.

    Speedups are against the raw baseline (monotone chain / maxima_3d), which
    is always computed even when 'raw' is not among the methods.
    """
    if not datasets:
        raise ValidationError("Bench needs at least one dataset.")
    if not methods:
        raise ValidationError("Bench needs at least one method.")
    allowed = HULL_METHODS if settings.task == "hull" else MAXIMA_METHODS
    unknown = [m for m in methods if m not in allowed]
    if unknown:
        raise ValidationError(
            f"Unknown {settings.task} methods {unknown}.\n  Available: {', '.join(allowed)}"
        )
    run_method = _run_hull_method if settings.task == "hull" else _run_maxima_method
    hull_task = settings.task == "hull"

    outcome = BenchOutcome(records=[], task=settings.task)
    for spec in datasets:
        dataset_id = spec.dataset_id
        records = {m: BenchRecord(dataset_id, m, spec.n, settings.seed) for m in methods}
        baseline = BenchRecord(dataset_id, "raw", spec.n, settings.seed)

        if settings.timing and settings.warmup:
            warm = gen_dataset(spec.with_seed(derive_seed(settings.seed, 0)))
            for method in methods:
                for _ in range(settings.warmup):
                    run_method(method, warm, params, settings.seed)

        for trial in range(settings.trials):
            trial_seed = derive_seed(settings.seed, trial)
            data = gen_dataset(spec.with_seed(trial_seed))
            reference = run_method("raw", data, params, trial_seed)
            baseline.op_counts.append(reference.result.op_count)
            if settings.timing:
                baseline.runtimes_ns.append(reference.result.elapsed_ns)

            entropy_before = measured_entropy(data.points, params, trial_seed) if hull_task else None
            for method in methods:
                run = reference if method == "raw" else run_method(method, data, params, trial_seed)
                rec = records[method]
                rec.op_counts.append(run.result.op_count)
                if settings.timing:
                    rec.runtimes_ns.append(run.result.elapsed_ns)
                    rec.preprocess_ns.append(run.preprocess_ns)
                if hull_task:
                    _score_hull(rec, reference, run, entropy_before)
                else:
                    predicted = run.result.indices
                    if run.index_map is not None:
                        predicted = run.index_map[predicted]
                    rec.f1_scores.append(maxima_f1(predicted, reference.result.indices))
            logger.debug(f"bench {dataset_id}: trial {trial + 1}/{settings.trials} done")

        base_mean = _metric_mean(baseline, settings.metric)
        tests: dict[str, StatsSummary] = {}
        for method in methods:
            rec = records[method]
            method_mean = _metric_mean(rec, settings.metric)
            rec.speedup = base_mean / method_mean if method_mean > 0 else None
            if method != "raw":
                tests[method] = paired_ttest(baseline.op_counts, rec.op_counts)
            outcome.records.append(rec)
        outcome.tests[dataset_id] = tests
        logger.info(
            f"bench {dataset_id} n={spec.n}: "
            + ", ".join(f"{m} {records[m].speedup:.3f}×" for m in methods
                        if records[m].speedup is not None)
        )
    return outcome


def _score_hull(rec: BenchRecord, reference: _TrialRun, run: _TrialRun, entropy_before: float) -> None:
    ref, got = reference.result, run.result
    rec.hull_errors.append(hull_error_pct(ref, got) if ref.area > 0 else None)
    rec.hausdorffs.append(hausdorff(PointSet(ref.vertices), PointSet(got.vertices)))
    if run.entropies is not None:
        # the restructurer's own estimator, at its first and last trace rows
        rec.entropies_before.append(run.entropies[0])
        rec.entropies_after.append(run.entropies[1])
    else:
        rec.entropies_before.append(entropy_before)
        rec.entropies_after.append(entropy_before)


# ═══════════════════════════════════════════════════════════════════════════════
# CORRELATION
# ═══════════════════════════════════════════════════════════════════════════════

def run_correlation(
    n_instances: int,
    entropy_levels: Sequence[int],
    oracle_mode: str = "generating",
    n: int = 12,
    params: dict[str, Any] | None = None,
    seed: int = 0,
    m: int = 2,
    spread: float = 0.01,
) -> CorrelationOutcome:
    """H_diff after anchor fitting against the oracle's normalized entropy.

    Instance i is a blobs2d set with entropy_levels[i mod L] blobs; anchors are
    fitted with k equal to that blob count. The control pairs the same values
    after a seeded shuffle of the oracle column.
    """
    params = params or {}
    if n_instances < 10:
        raise ValidationError(f"Correlation needs at least 10 instances, got {n_instances}.")
    if oracle_mode not in ORACLE_MODES:
        raise ValidationError(f"Unknown oracle mode '{oracle_mode}'; expected one of {ORACLE_MODES}.")
    levels = [int(b) for b in entropy_levels]
    if not levels or min(levels) < 1 or max(levels) > n:
        raise ValidationError(f"Blob counts must lie in [1, n={n}], got {levels}.")

    rows: list[CorrelationRow] = []
    for i in range(n_instances):
        blobs = levels[i % len(levels)]
        inst_seed = derive_seed(seed, i)
        data = gen_dataset(DatasetSpec("blobs2d", n, inst_seed, {"blobs": blobs, "spread": spread}))
        fit = _fit(data.points, params, inst_seed, k=blobs)
        if oracle_mode == "generating":
            oracle = generating_partition_entropy(data.labels)
        else:
            oracle = min_entropy_arrangement(data.points, m)
        rows.append(CorrelationRow(i, blobs, n, inst_seed, fit.trace[-1], oracle.entropy_normalized))

    x = [r.h_diff for r in rows]
    y = [r.oracle_entropy for r in rows]
    stats = r_squared(x, y)
    shuffled = derive_rng(seed, n_instances).permutation(len(y))
    control = r_squared(x, [y[j] for j in shuffled])
    logger.info(
        f"correlate {n_instances} instances ({oracle_mode}): R² {stats.r_squared:.4f}, "
        f"control {control.r_squared:.4f}"
    )
    return CorrelationOutcome(rows, stats, control, oracle_mode)


# ═══════════════════════════════════════════════════════════════════════════════
# ABLATION
# ═══════════════════════════════════════════════════════════════════════════════

def run_ablation(
    datasets: Sequence[DatasetSpec],
    grids: dict[str, Sequence[Any]],
    params: dict[str, Any],
    settings: BenchSettings,
    method: str = "restructure+adaptive",
) -> AblationOutcome:
    """Vary one factor at a time from `params`; one row per dataset × factor value."""
    grids = {g: list(v) for g, v in grids.items() if v is not None}
    unknown = [g for g in grids if g not in GRID_KEYS]
    if unknown:
        raise ValidationError(f"Unknown ablation grids {unknown}.\n  Available: {', '.join(GRID_KEYS)}")
    if not grids or any(len(v) == 0 for v in grids.values()):
        raise ValidationError("Ablation needs at least one nonempty grid.")

    outcome = AblationOutcome(rows=[])
    for grid, values in grids.items():
        factor = GRID_KEYS[grid]
        for value in values:
            logger.info(f"ablate {factor}={value}")
            bench = run_speedup_bench(datasets, ["raw", method], {**params, factor: value}, settings)
            outcome.warnings.extend(bench.warnings())
            for spec in datasets:
                raw = bench.record(spec.dataset_id, "raw")
                rec = bench.record(spec.dataset_id, method)
                speedups = tuple(
                    (b / a) if a > 0 else 0.0 for b, a in zip(raw.op_counts, rec.op_counts)
                )
                outcome.rows.append(AblationRow(
                    factor=factor,
                    value=value,
                    method=method,
                    n=spec.n,
                    seeds=rec.trials,
                    speedups=speedups,
                    hausdorffs=tuple(h for h in rec.hausdorffs if h is not None),
                    hull_errors=tuple(e for e in rec.hull_errors if e is not None),
                    entropies_after=tuple(e for e in rec.entropies_after if e is not None),
                ))
    return outcome


# ═══════════════════════════════════════════════════════════════════════════════
# ACCEPTANCE
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class AcceptanceCheck:
    name: str
    passed: bool
    observed: Any
    threshold: Any

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "observed": self.observed, "threshold": self.threshold}


def check_bench_acceptance(outcome: BenchOutcome, acceptance: dict[str, Any],
                           method: str = "restructure+adaptive") -> list[AcceptanceCheck]:
    checks: list[AcceptanceCheck] = []
    for rec in outcome.records:
        if rec.method != method:
            continue
        tag = f"{rec.dataset}/{rec.method}"
        if "min_speedup" in acceptance:
            checks.append(AcceptanceCheck(f"{tag} speedup", rec.speedup is not None
                                          and rec.speedup >= acceptance["min_speedup"],
                                          rec.speedup, acceptance["min_speedup"]))
        if "max_hull_error_pct" in acceptance:
            err = rec.hull_error_pct
            checks.append(AcceptanceCheck(f"{tag} hull_error_pct", err is not None
                                          and err < acceptance["max_hull_error_pct"],
                                          err, acceptance["max_hull_error_pct"]))
        if "max_entropy_ratio" in acceptance and rec.entropy_before:
            ratio = rec.entropy_after / rec.entropy_before
            checks.append(AcceptanceCheck(f"{tag} entropy_ratio",
                                          ratio <= acceptance["max_entropy_ratio"],
                                          ratio, acceptance["max_entropy_ratio"]))
        if "max_p_value" in acceptance and rec.method in outcome.tests.get(rec.dataset, {}):
            p = outcome.tests[rec.dataset][rec.method].p_value
            checks.append(AcceptanceCheck(f"{tag} p_value", p is not None
                                          and p < acceptance["max_p_value"],
                                          p, acceptance["max_p_value"]))
    return checks


def check_correlation_acceptance(outcome: CorrelationOutcome,
                                 acceptance: dict[str, Any]) -> list[AcceptanceCheck]:
    checks = []
    if "min_r2" in acceptance:
        r2 = outcome.stats.r_squared
        checks.append(AcceptanceCheck("r_squared", r2 >= acceptance["min_r2"], r2, acceptance["min_r2"]))
    if "max_control_r2" in acceptance:
        r2 = outcome.control.r_squared
        checks.append(AcceptanceCheck("control_r_squared", r2 < acceptance["max_control_r2"],
                                      r2, acceptance["max_control_r2"]))
    return checks


def check_ablation_acceptance(outcome: AblationOutcome,
                              acceptance: dict[str, Any]) -> list[AcceptanceCheck]:
    checks = []
    for factor, better, worse in acceptance.get("speedup_ordering", []):
        hi = outcome.mean_speedup(factor, better)
        lo = outcome.mean_speedup(factor, worse)
        checks.append(AcceptanceCheck(f"speedup {factor}={better} ≥ {factor}={worse}",
                                      hi >= lo, [hi, lo], None))
    return checks
