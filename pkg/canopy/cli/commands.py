"""
canopy/cli/commands.py

One handler per subcommand. Handlers compute, write any secondary files
next to the main output, and return a CommandOutput; garden.py writes the
main output, its envelope sidecar and the run log.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from roots.entropy import (
    AnchorSet,
    check_alpha_range,
    fit_anchors,
    h_diff,
    hard_labels,
    select_k_elbow,
)
from roots.geometry import adaptive_maxima, hull_of_points, maxima_3d
from roots.halfspace import (
    HalfspaceSet,
    enumerate_cells,
    evaluate_bound,
    h_diff_signed,
    h_soft,
    init_halfspaces,
    select_tau,
)
from roots.oracle import generating_partition_entropy, min_entropy_arrangement, min_entropy_partition
from roots.restructure import TRACE_HEADER, RestructureConfig, restructure
from soil.errors import ValidationError
from soil.generate import DatasetSpec, gen_dataset
from soil.io import point_header, read_json, read_labels, read_points, write_csv_rows, write_json, write_labels
from soil.pointset import HardPartition, PointSet

from ..bench.figures import emit_svg_scatter
from ..bench.records import (
    ABLATION_HEADER,
    BENCH_HEADER,
    CORRELATION_HEADER,
    MAXIMA_HEADER,
)
from ..bench.runners import (
    BenchSettings,
    check_ablation_acceptance,
    check_bench_acceptance,
    check_correlation_acceptance,
    run_ablation,
    run_correlation,
    run_speedup_bench,
)
from ..config import RunConfig
from ..envelope import EnvelopeInput

logger = logging.getLogger("canopy.cli")


# ═══════════════════════════════════════════════════════════════════════════════
# CONTEXT AND OUTPUT
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass
class Context:
    args: argparse.Namespace
    config: RunConfig
    project_root: Path
    seed: int
    out: Path | None
    fmt: str
    experiment: dict[str, Any] | None = None

    def sibling(self, suffix: str) -> Path | None:
        """Secondary output path next to --out, e.g. run.csv → run.trace.csv."""
        if self.out is None:
            return None
        return self.out.with_name(self.out.stem + suffix)

    @property
    def values(self) -> dict[str, Any]:
        return dict(self.config.values)


@dataclass
class CommandOutput:
    primitive: str
    header: list[str]
    rows: list[list]
    payload: dict[str, Any]
    params: dict[str, Any] = field(default_factory=dict)
    inputs: list[EnvelopeInput] = field(default_factory=list)
    warnings: list[dict] = field(default_factory=list)
    secondary: dict[str, Path] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)


def _warn(level: str, message: str) -> dict:
    return {"level": level, "message": message}


def _points_input(path: str) -> tuple[PointSet, EnvelopeInput]:
    return read_points(path), EnvelopeInput("points", path, "point_set")


def _alpha_warnings(alpha: float) -> list[dict]:
    if check_alpha_range(alpha):
        return []
    return [_warn("info", f"alpha={alpha:g} is outside the moderate range [5, 20]")]


def _fitted_anchors(S: PointSet, ctx: Context, k: int | None = None) -> AnchorSet:
    v = ctx.config
    return fit_anchors(
        S, k if k is not None else v.resolved_k(S.n),
        alpha=float(v["alpha"]), init=v["anchor_init"], steps=int(v["anchor_steps"]),
        lr=float(v["anchor_lr"]), scale_mode=v["scale_mode"], seed=ctx.seed,
    ).anchors


def _halfspaces(S: PointSet, ctx: Context) -> HalfspaceSet:
    path = getattr(ctx.args, "halfspaces", None)
    if path:
        return HalfspaceSet.from_dict(read_json(path))
    v = ctx.config
    return init_halfspaces(S, int(v["m"]), v["halfspace_init"], ctx.seed, float(v["tau"]))


def _partition_for(S: PointSet, ctx: Context, inputs: list[EnvelopeInput]) -> HardPartition:
    """Partition from --labels when given, otherwise nearest fitted anchor."""
    if getattr(ctx.args, "labels", None):
        inputs.append(EnvelopeInput("labels", ctx.args.labels, "partition"))
        P = HardPartition(read_labels(ctx.args.labels))
        P.check_covers(S)
        return P
    return HardPartition(hard_labels(S, _fitted_anchors(S, ctx)))


# ═══════════════════════════════════════════════════════════════════════════════
# POINT-SET COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════

def cmd_gen(ctx: Context) -> CommandOutput:
    params = dict(ctx.args.param or {})
    spec = DatasetSpec(ctx.args.kind, ctx.args.n, ctx.seed, params)
    data = gen_dataset(spec)
    S = data.points

    secondary = {}
    payload: dict[str, Any] = {"dataset": spec.dataset_id, "points": S.points.tolist()}
    if data.labels is not None:
        payload["labels"] = data.labels.tolist()
        labels_path = ctx.sibling(".labels.csv")
        if labels_path is not None and ctx.fmt == "csv":
            secondary["labels"] = write_labels(labels_path, data.labels)

    return CommandOutput(
        primitive="gen_dataset",
        header=point_header(S.d),
        rows=S.points.tolist(),
        payload=payload,
        params={"kind": spec.kind, "n": spec.n, "seed": spec.seed, "params": params},
        secondary=secondary,
        summary={"dataset": spec.dataset_id, "n": S.n, "d": S.d},
        metadata={"n": S.n, "d": S.d},
    )


def cmd_entropy(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    inputs = [source]
    estimator = ctx.args.estimator or ctx.config["estimator"]
    warnings: list[dict] = []
    primitive = "h_diff"

    if estimator == "ball":
        if ctx.args.anchors:
            anchors = AnchorSet.from_dict(read_json(ctx.args.anchors))
            inputs.append(EnvelopeInput("anchors", ctx.args.anchors, "anchor_set"))
        else:
            anchors = _fitted_anchors(S, ctx)
        warnings += _alpha_warnings(anchors.alpha)
        report = h_diff(S, anchors, with_grad=ctx.args.grad)
        size, params = anchors.k, anchors.to_dict()
    elif estimator == "halfspace":
        H = _halfspaces(S, ctx)
        G = enumerate_cells(S, H)
        if G.on_boundary:
            warnings.append(_warn("warning", "a point lies exactly on a hyperplane; soft masses split it"))
        report = h_soft(S, H, G, with_grad=ctx.args.grad)
        size, params, primitive = G.K, H.to_dict(), "h_soft"
    else:
        H = _halfspaces(S, ctx).unit_normalized()
        alpha = float(ctx.config["alpha"])
        warnings += _alpha_warnings(alpha)
        report = h_diff_signed(S, H.w, -H.b, alpha, with_grad=ctx.args.grad)
        size, primitive = H.m, "h_diff_signed"
        params = {"normals": H.w.tolist(), "offsets": (-H.b).tolist(), "alpha": alpha}

    payload = {"estimator": estimator, "value": report.value, "k": size, "params": params}
    if ctx.args.grad and report.grad_points is not None:
        payload["grad_points"] = report.grad_points.tolist()

    return CommandOutput(
        primitive=primitive,
        header=["estimator", "value", "k"],
        rows=[[estimator, report.value, size]],
        payload=payload,
        params={"estimator": estimator, "alpha": ctx.config["alpha"], "tau": ctx.config["tau"],
                "m": ctx.config["m"], "seed": ctx.seed},
        inputs=inputs,
        warnings=warnings,
        summary={"estimator": estimator, "value": report.value, "k": size},
    )


def cmd_fit_anchors(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    v = ctx.config
    init = ctx.args.init or v["anchor_init"]
    warnings = _alpha_warnings(float(v["alpha"]))
    elbow = None
    k = v.resolved_k(S.n)

    if ctx.args.elbow:
        lo, hi = ctx.args.elbow
        elbow = select_k_elbow(S, range(lo, hi + 1), float(v["alpha"]), init,
                               int(v["anchor_steps"]), float(v["anchor_lr"]), v["scale_mode"], ctx.seed)
        k = elbow.k
        if elbow.no_elbow:
            warnings.append(_warn("warning", f"no elbow in k ∈ [{lo}, {hi}]; using k={k}"))
        elif elbow.weak_curvature:
            warnings.append(_warn("info", f"elbow at k={k} is weak; the curve is close to log k"))

    fit = fit_anchors(S, k, alpha=float(v["alpha"]), init=init, steps=int(v["anchor_steps"]),
                      lr=float(v["anchor_lr"]), scale_mode=v["scale_mode"], seed=ctx.seed)
    if not fit.converged:
        warnings.append(_warn("info", f"anchor fit stopped after {fit.iterations} steps "
                                      f"with gradient norm {fit.grad_norm:.3g}"))

    payload = {
        "anchors": fit.anchors.to_dict(),
        "trace": fit.trace,
        "converged": fit.converged,
        "grad_norm": fit.grad_norm,
        "iterations": fit.iterations,
    }
    if elbow is not None:
        payload["elbow"] = {"k": elbow.k, "curve": {str(kk): h for kk, h in elbow.curve.items()},
                            "no_elbow": elbow.no_elbow, "weak_curvature": elbow.weak_curvature}

    return CommandOutput(
        primitive="select_k_elbow" if elbow is not None else "fit_anchors",
        header=point_header(S.d),
        rows=fit.anchors.centers.tolist(),
        payload=payload,
        params={"k": k, "alpha": v["alpha"], "init": init, "steps": v["anchor_steps"],
                "lr": v["anchor_lr"], "scale_mode": v["scale_mode"], "seed": ctx.seed},
        inputs=[source],
        warnings=warnings,
        summary={"k": k, "entropy_before": fit.trace[0], "entropy_after": fit.trace[-1],
                 "iterations": fit.iterations},
    )


def cmd_restructure(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    cfg = RestructureConfig.from_dict({**ctx.values, "seed": ctx.seed})
    result = restructure(S, cfg)
    S2 = result.output

    secondary: dict[str, Path] = {}
    trace_rows = [row.as_row() for row in result.trace]
    trace_path = Path(ctx.args.trace) if ctx.args.trace else ctx.sibling(".trace.csv")
    if trace_path is not None:
        secondary["trace"] = write_csv_rows(trace_path, TRACE_HEADER, trace_rows)
    params_path = ctx.sibling(".params.json")
    if params_path is not None and result.estimator_params is not None:
        secondary["estimator_params"] = write_json(params_path, result.estimator_params.to_dict())
    svg_path = ctx.sibling(".svg")
    if ctx.args.svg and svg_path is not None and S.d == 2:
        both = np.vstack([S.points, S2.points])
        labels = ["before"] * S.n + ["after"] * S2.n
        emit_svg_scatter(both, labels, title="restructure", path=svg_path)
        secondary["figure"] = svg_path

    warnings = []
    if result.stopped_early:
        warnings.append(_warn("info", f"descent stopped early at step {result.iterations_run}"))
    if cfg.estimator == "ball":
        warnings += _alpha_warnings(cfg.alpha)

    first, last = (result.trace[0], result.trace[-1]) if result.trace else (None, None)
    summary = {
        "iterations_run": result.iterations_run,
        "stopped_early": result.stopped_early,
        "refits": result.refits,
        "entropy_before": first.entropy if first else None,
        "entropy_after": last.entropy if last else None,
        "total_before": first.total if first else None,
        "total_after": last.total if last else None,
    }
    return CommandOutput(
        primitive="restructure",
        header=point_header(S2.d),
        rows=S2.points.tolist(),
        payload={"points": S2.points.tolist(), **summary,
                 "trace": [dict(zip(TRACE_HEADER, r)) for r in trace_rows]},
        params={"lambda": cfg.lam, "mu": cfg.mu, "estimator": cfg.estimator, "steps": cfg.steps,
                "lr": cfg.lr, "refit_every": cfg.refit_every, "fixed_anchors": cfg.fixed_anchors,
                "step_scale": cfg.step_scale, "hull_guard": cfg.hull_guard, "seed": cfg.seed},
        inputs=[source],
        warnings=warnings,
        secondary=secondary,
        summary=summary,
        metadata={"n": S2.n, "d": S2.d},
    )


def cmd_hull(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    inputs = [source]
    algorithm = ctx.args.algorithm
    P = _partition_for(S, ctx, inputs) if algorithm == "partition_merge" else None
    result = hull_of_points(S, algorithm, P)
    summary = {"algorithm": algorithm, "h": result.h, "area": result.area, "op_count": result.op_count}
    return CommandOutput(
        primitive="hull",
        header=point_header(2),
        rows=result.vertices.tolist(),
        payload={"algorithm": algorithm, **result.to_dict()},
        params={"algorithm": algorithm, "seed": ctx.seed},
        inputs=inputs,
        summary=summary,
        metadata={"op_count": result.op_count, "h": result.h},
    )


def cmd_maxima(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    inputs = [source]
    if ctx.args.adaptive:
        result = adaptive_maxima(S, _partition_for(S, ctx, inputs))
    else:
        result = maxima_3d(S)
    return CommandOutput(
        primitive="maxima",
        header=["index"],
        rows=[[int(i)] for i in result.indices.tolist()],
        payload={"adaptive": ctx.args.adaptive, **result.to_dict()},
        params={"adaptive": ctx.args.adaptive, "seed": ctx.seed},
        inputs=inputs,
        summary={"count": int(result.indices.size), "op_count": result.op_count},
        metadata={"op_count": result.op_count},
    )


def cmd_oracle(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    inputs = [source]
    mode = ctx.args.mode
    if mode == "partition":
        result = min_entropy_partition(S, int(ctx.config["parts_min"]))
        primitive = "min_entropy_partition"
    elif mode == "arrangement":
        result = min_entropy_arrangement(S, int(ctx.config["m"]))
        primitive = "min_entropy_arrangement"
    else:
        if not ctx.args.labels:
            raise ValidationError("oracle --mode generating needs --labels <csv>.")
        inputs.append(EnvelopeInput("labels", ctx.args.labels, "partition"))
        labels = read_labels(ctx.args.labels)
        if labels.size != S.n:
            raise ValidationError(f"--labels has {labels.size} rows but the point set has {S.n}.")
        result = generating_partition_entropy(labels)
        primitive = "generating_partition_entropy"

    return CommandOutput(
        primitive=primitive,
        header=["index", "part"],
        rows=[[i, int(p)] for i, p in enumerate(result.partition.labels.tolist())],
        payload=result.to_dict(),
        params={"mode": mode, "parts_min": ctx.config["parts_min"], "m": ctx.config["m"]},
        inputs=inputs,
        summary={"entropy_nats": result.entropy_unnormalized,
                 "entropy_normalized": result.entropy_normalized,
                 "parts": result.partition.k},
        metadata={"entropy_normalized": result.entropy_normalized},
    )


def cmd_bound(ctx: Context) -> CommandOutput:
    S, source = _points_input(ctx.args.input)
    inputs = [source]
    if ctx.args.halfspaces:
        inputs.append(EnvelopeInput("halfspaces", ctx.args.halfspaces, "halfspace_set"))
    H = _halfspaces(S, ctx)
    delta, C = float(ctx.config["delta"]), float(ctx.config["constant_C"])
    if ctx.args.taus:
        _, report = select_tau(S, H, ctx.args.taus, delta, C)
    else:
        report = evaluate_bound(S, H, enumerate_cells(S, H), delta, C, ctx.args.asymptotic)

    warnings = []
    if report.vacuous_bound:
        warnings.append(_warn("warning", f"bound is vacuous: epsilon_total={report.epsilon_total:.4g} "
                                         f"≥ K={report.K}"))
    row = report.to_dict()
    return CommandOutput(
        primitive="evaluate_bound",
        header=list(row),
        rows=[list(row.values())],
        payload=row,
        params={"delta": delta, "constant_C": C, "tau": report.tau, "m": H.m,
                "asymptotic": ctx.args.asymptotic, "taus": ctx.args.taus},
        inputs=inputs,
        warnings=warnings,
        summary={"bound": report.bound, "tau": report.tau, "vacuous_bound": report.vacuous_bound},
    )


# ═══════════════════════════════════════════════════════════════════════════════
# BENCH COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════

def _dataset_specs(ctx: Context) -> list[DatasetSpec]:
    exp = ctx.experiment
    if exp and exp.get("datasets"):
        return [DatasetSpec(d["kind"], int(d["n"]), ctx.seed, dict(d.get("params") or {}))
                for d in exp["datasets"]]
    sizes = ctx.args.n or ctx.config.bench.get("sizes") or [4096]
    kinds = ctx.args.dataset or ["uniform2d"]
    params = dict(ctx.args.param or {})
    return [DatasetSpec(kind, int(n), ctx.seed, params) for kind in kinds for n in sizes]


def _settings(ctx: Context, task: str) -> BenchSettings:
    params = ctx.values
    if getattr(ctx.args, "timing", False):
        params["timing"] = True
    if getattr(ctx.args, "metric", None):
        params["metric"] = ctx.args.metric
    return BenchSettings.from_params(params, task=task, seed=ctx.seed)


def _acceptance(ctx: Context) -> dict[str, Any]:
    return dict((ctx.experiment or {}).get("acceptance") or {})


def _write_summary(ctx: Context, summary: dict, secondary: dict[str, Path]) -> None:
    path = ctx.sibling(".summary.json")
    if path is not None:
        secondary["summary"] = write_json(path, summary)


def _acceptance_warnings(checks) -> list[dict]:
    return [_warn("warning", f"acceptance check failed: {c.name} observed {c.observed}, "
                             f"threshold {c.threshold}")
            for c in checks if not c.passed]


def cmd_bench(ctx: Context) -> CommandOutput:
    exp = ctx.experiment or {}
    task = exp.get("task") or ctx.args.task
    methods = exp.get("methods") or ctx.args.methods or (
        ["raw", "heuristic_sort", "restructure+adaptive"] if task == "hull" else ["raw", "adaptive"]
    )
    datasets = _dataset_specs(ctx)
    settings = _settings(ctx, task)
    outcome = run_speedup_bench(datasets, methods, ctx.values, settings)

    checks = check_bench_acceptance(outcome, _acceptance(ctx)) if task == "hull" else []
    summary = {**outcome.summary(), "acceptance": [c.to_dict() for c in checks]}
    secondary: dict[str, Path] = {}
    _write_summary(ctx, summary, secondary)

    if task == "maxima":
        header, rows = MAXIMA_HEADER, [r.as_maxima_row() for r in outcome.records]
    else:
        header, rows = BENCH_HEADER, [r.as_row() for r in outcome.records]
    return CommandOutput(
        primitive="bench",
        header=header,
        rows=rows,
        payload={"rows": [dict(zip(header, r)) for r in rows], "summary": summary},
        params={"task": task, "methods": list(methods), "trials": settings.trials,
                "timing": settings.timing, "metric": settings.metric, "seed": ctx.seed,
                "datasets": [d.dataset_id for d in datasets], "sizes": [d.n for d in datasets]},
        warnings=outcome.warnings() + _acceptance_warnings(checks),
        secondary=secondary,
        summary=summary,
        metadata={"schema_version_csv": 1, "task": task},
    )


def cmd_correlate(ctx: Context) -> CommandOutput:
    corr = dict((ctx.experiment or {}).get("correlation") or {})
    bench = ctx.config.bench
    instances = int(corr.get("instances") or ctx.args.instances or bench.get("correlation_instances", 50))
    n = int(corr.get("n") or ctx.args.n or bench.get("correlation_n", 12))
    lo, hi = corr.get("blob_counts") or ctx.args.blobs
    mode = corr.get("oracle_mode") or ctx.args.oracle_mode
    m = int(corr.get("m", ctx.config["m"]))

    outcome = run_correlation(instances, list(range(int(lo), int(hi) + 1)), mode, n,
                              ctx.values, ctx.seed, m)
    checks = check_correlation_acceptance(outcome, _acceptance(ctx))
    summary = {**outcome.summary(), "acceptance": [c.to_dict() for c in checks]}

    secondary: dict[str, Path] = {}
    _write_summary(ctx, summary, secondary)
    svg_path = ctx.sibling(".svg")
    if ctx.args.svg and svg_path is not None:
        xy = np.array([[r.h_diff, r.oracle_entropy] for r in outcome.rows])
        emit_svg_scatter(xy, [r.blobs for r in outcome.rows], axes=("H_diff", "oracle entropy"),
                         title=f"R² = {outcome.stats.r_squared:.3f}", path=svg_path)
        secondary["figure"] = svg_path

    rows = [r.as_row() for r in outcome.rows]
    return CommandOutput(
        primitive="correlate",
        header=CORRELATION_HEADER,
        rows=rows,
        payload={"rows": [dict(zip(CORRELATION_HEADER, r)) for r in rows], "summary": summary},
        params={"instances": instances, "n": n, "blob_counts": [lo, hi], "oracle_mode": mode,
                "m": m, "seed": ctx.seed},
        warnings=outcome.warnings() + _acceptance_warnings(checks),
        secondary=secondary,
        summary=summary,
    )


def cmd_ablate(ctx: Context) -> CommandOutput:
    exp = ctx.experiment or {}
    grids = dict(exp.get("grids") or {})
    if not grids:
        a = ctx.args
        grids = {key: value for key, value in {
            "alphas": a.alphas, "ks": a.ks, "inits": a.inits, "lambdas": a.lambdas,
            "mus": a.mus, "fixed_anchors": a.fixed_anchors, "estimators": a.estimators,
        }.items() if value}
    datasets = _dataset_specs(ctx)
    settings = _settings(ctx, "hull")
    outcome = run_ablation(datasets, grids, ctx.values, settings)

    checks = check_ablation_acceptance(outcome, _acceptance(ctx))
    summary = {**outcome.summary(), "acceptance": [c.to_dict() for c in checks]}
    secondary: dict[str, Path] = {}
    _write_summary(ctx, summary, secondary)

    rows = [r.as_row() for r in outcome.rows]
    return CommandOutput(
        primitive="ablate",
        header=ABLATION_HEADER,
        rows=rows,
        payload={"rows": [dict(zip(ABLATION_HEADER, r)) for r in rows], "summary": summary},
        params={"grids": grids, "trials": settings.trials, "seed": ctx.seed,
                "datasets": [d.dataset_id for d in datasets]},
        warnings=outcome.warnings + _acceptance_warnings(checks),
        secondary=secondary,
        summary=summary,
    )


COMMANDS: dict[str, Callable[[Context], CommandOutput]] = {
    "gen": cmd_gen,
    "entropy": cmd_entropy,
    "fit-anchors": cmd_fit_anchors,
    "restructure": cmd_restructure,
    "hull": cmd_hull,
    "maxima": cmd_maxima,
    "oracle": cmd_oracle,
    "bound": cmd_bound,
    "bench": cmd_bench,
    "correlate": cmd_correlate,
    "ablate": cmd_ablate,
}
