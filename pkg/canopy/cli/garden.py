#!/usr/bin/env python3
"""
canopy/cli/garden.py: the entropyGarden command line.

Usage:
    python -m canopy.cli gen --kind uniform2d --n 4096 --seed 7 --out compost/results/uniform.csv
    python -m canopy.cli entropy --in compost/results/uniform.csv --estimator ball
    python -m canopy.cli restructure --in compost/results/uniform.csv --out low.csv --svg
    python -m canopy.cli hull --in low.csv --algorithm chan --format json
    python -m canopy.cli oracle --in small.csv --mode partition
    python -m canopy.cli bench --experiment garden/experiments/uniform_hull_speedup.yml --profile dev

Every output written with --out gets a `<out>.envelope.json` sidecar, and
every invocation leaves a run log in compost/logs/.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from soil.errors import ValidationError, exit_code_for
from soil.io import csv_text, write_csv_rows, write_json

from ..config import PROFILES, find_project_root, load_config, load_experiment
from ..envelope import BuildRequest, EnvelopeBuilder
from ..runlog import RunLog
from .commands import COMMANDS, CommandOutput, Context

logger = logging.getLogger("canopy.cli")


def setup_logging(verbose: bool = False):
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level, format="%(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )


# ═══════════════════════════════════════════════════════════════════════════════
# ARGUMENT TYPES
# ═══════════════════════════════════════════════════════════════════════════════

def _k_value(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"k must be an integer or 'auto', got '{text}'")
    if k < 1:
        raise argparse.ArgumentTypeError(f"k must be ≥ 1, got {k}")
    return k


def _key_value(text: str) -> tuple[str, Any]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got '{text}'")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _bool_list(text: str) -> list[bool]:
    return [t.strip().lower() in ("1", "true", "yes") for t in text.split(",") if t.strip()]


class _KeyValues(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        current = dict(getattr(namespace, self.dest) or {})
        key, value = values
        current[key] = value
        setattr(namespace, self.dest, current)


# ═══════════════════════════════════════════════════════════════════════════════
# PARSER
# ═══════════════════════════════════════════════════════════════════════════════

# CLI flag → config key
TUNING_FLAGS = {
    "alpha": "alpha", "k": "k", "tau": "tau", "m": "m", "lam": "lambda", "mu": "mu",
    "lr": "lr", "steps": "steps", "trials": "trials", "config_estimator": "estimator",
    "scale_mode": "scale_mode", "parts_min": "parts_min", "delta": "delta",
    "constant_C": "constant_C", "anchor_init": "anchor_init", "refit_every": "refit_every",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global")
    g.add_argument("--seed", type=int, default=None, help="Master seed (default: config seed or 0)")
    g.add_argument("--config", default=None, help="Config JSON merged over defaults and profile")
    g.add_argument("--out", default=None, help="Output path; omitted → data to stdout")
    g.add_argument("--format", choices=["csv", "json"], default=None,
                   help="Output format (default: from --out suffix, else csv)")
    g.add_argument("--profile", choices=list(PROFILES), default="full")
    g.add_argument("--experiment", default=None, help="Garden experiment YAML (bench/correlate/ablate)")
    g.add_argument("--project-root", default=None)
    g.add_argument("--verbose", "-v", action="store_true")

    t = common.add_argument_group("tuning (override config keys)")
    t.add_argument("--alpha", type=float)
    t.add_argument("--k", type=_k_value)
    t.add_argument("--tau", type=float)
    t.add_argument("--m", type=int)
    t.add_argument("--lambda", dest="lam", type=float)
    t.add_argument("--mu", type=float)
    t.add_argument("--lr", type=float)
    t.add_argument("--steps", type=int)
    t.add_argument("--trials", type=int)
    t.add_argument("--config-estimator", dest="config_estimator", choices=["ball", "halfspace"],
                   help="Estimator used inside restructure / bench")
    t.add_argument("--scale-mode", dest="scale_mode", choices=["raw", "normalized"])
    t.add_argument("--parts-min", dest="parts_min", type=int)
    t.add_argument("--delta", type=float)
    t.add_argument("--constant-C", dest="constant_C", type=float)
    t.add_argument("--anchor-init", dest="anchor_init", choices=["kmeanspp", "random"])
    t.add_argument("--refit-every", dest="refit_every", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="garden",
        description="entropyGarden: entropy estimators, exact oracles, hulls and benches",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  garden gen --kind blobs2d --n 512 --param blobs=8 --out blobs.csv
  garden fit-anchors --in blobs.csv --elbow 2 12 --format json --out anchors.json
  garden bound --in blobs.csv --taus 0.05,0.1,0.25
  garden correlate --instances 50 --n 12 --blobs 1 8 --svg --out corr.csv
        """,
    )
    common = _common_parser()
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="Generate a seeded synthetic dataset")
    p.add_argument("--kind", required=True,
                   choices=["uniform2d", "parabolic2d", "blobs2d", "blobs3d", "pareto3d"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--param", type=_key_value, action=_KeyValues, default=None,
                   help="Generator knob, e.g. sigma=0.02, blobs=16, spread=0.01 (repeatable)")

    p = sub.add_parser("entropy", parents=[common], help="Evaluate an entropy estimator")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--estimator", choices=["ball", "halfspace", "signed"], default=None)
    p.add_argument("--anchors", default=None, help="AnchorSet JSON (ball); default fits anchors")
    p.add_argument("--halfspaces", default=None, help="HalfspaceSet JSON; default initialises them")
    p.add_argument("--grad", action="store_true", help="Include point gradients in JSON output")

    p = sub.add_parser("fit-anchors", parents=[common], help="Fit anchors by descent on H_diff")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--init", choices=["kmeanspp", "random"], default=None)
    p.add_argument("--elbow", type=int, nargs=2, metavar=("K_LO", "K_HI"), default=None,
                   help="Choose k by the elbow of the entropy curve over [K_LO, K_HI]")

    p = sub.add_parser("restructure", parents=[common], help="Lower the entropy of a point set")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--trace", default=None,
                   help="Per-step trace CSV (default: <out>.trace.csv next to --out)")
    p.add_argument("--svg", action="store_true", help="Also write a before/after scatter")

    p = sub.add_parser("hull", parents=[common], help="Exact 2-D convex hull")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--algorithm", choices=["monotone_chain", "chan", "partition_merge"],
                   default="monotone_chain")
    p.add_argument("--labels", default=None, help="Partition labels CSV for partition_merge")

    p = sub.add_parser("maxima", parents=[common], help="Exact 3-D maxima set")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--labels", default=None, help="Partition labels CSV for --adaptive")

    p = sub.add_parser("oracle", parents=[common], help="Exact minimum-entropy partitions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=["partition", "arrangement", "generating"], default="partition")
    p.add_argument("--labels", default=None, help="Generating labels CSV for --mode generating")

    p = sub.add_parser("bound", parents=[common], help="Data-dependent bound for H_soft")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--halfspaces", default=None)
    p.add_argument("--taus", type=_float_list, default=None, help="Choose tau from this grid")
    p.add_argument("--asymptotic", action="store_true")

    for name, help_text in (("bench", "Speedup bench over datasets × methods"),
                            ("ablate", "One-factor-at-a-time ablation")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--dataset", type=_str_list, default=None, help="Dataset kinds, comma-separated")
        p.add_argument("--n", type=_int_list, default=None, help="Sizes, comma-separated")
        p.add_argument("--param", type=_key_value, action=_KeyValues, default=None)
        p.add_argument("--timing", action="store_true", help="Record wall time (sequential, warmup)")
        p.add_argument("--metric", choices=["op_count", "runtime"], default=None)
        if name == "bench":
            p.add_argument("--task", choices=["hull", "maxima"], default="hull")
            p.add_argument("--methods", type=_str_list, default=None)
        else:
            p.add_argument("--alphas", type=_float_list, default=None)
            p.add_argument("--ks", type=_int_list, default=None)
            p.add_argument("--inits", type=_str_list, default=None)
            p.add_argument("--lambdas", type=_float_list, default=None)
            p.add_argument("--mus", type=_float_list, default=None)
            p.add_argument("--fixed-anchors", dest="fixed_anchors", type=_bool_list, default=None)
            p.add_argument("--estimators", type=_str_list, default=None)

    p = sub.add_parser("correlate", parents=[common], help="H_diff vs oracle entropy correlation")
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--blobs", type=int, nargs=2, metavar=("LO", "HI"), default=[1, 8])
    p.add_argument("--oracle-mode", dest="oracle_mode", choices=["generating", "arrangement_m"],
                   default="generating")
    p.add_argument("--svg", action="store_true", help="Also write the correlation scatter")

    return parser


# ═══════════════════════════════════════════════════════════════════════════════
# OUTPUT
# ═══════════════════════════════════════════════════════════════════════════════

def _format_for(args: argparse.Namespace, out: Path | None) -> str:
    if args.format:
        return args.format
    if out is not None and out.suffix.lower() == ".json":
        return "json"
    return "csv"


def emit(ctx: Context, result: CommandOutput, duration: float, runlog: RunLog) -> None:
    if ctx.out is None:
        if ctx.fmt == "json":
            sys.stdout.write(json.dumps(result.payload, indent=2) + "\n")
        else:
            sys.stdout.write(csv_text(result.header, result.rows))
        return

    if ctx.fmt == "json":
        write_json(ctx.out, result.payload)
    else:
        write_csv_rows(ctx.out, result.header, result.rows)

    builder = EnvelopeBuilder(hashing=ctx.config.hashing, project_root=ctx.project_root)
    sidecar = builder.write(BuildRequest(
        primitive=result.primitive,
        output_path=ctx.out,
        output_format=ctx.fmt,
        params=result.params,
        inputs=result.inputs,
        warnings=result.warnings,
        duration_seconds=duration,
        metadata={"profile": ctx.config.profile, "seed": ctx.seed, **result.metadata},
        secondary={k: str(v) for k, v in result.secondary.items()},
    ))
    runlog.outputs.extend([str(ctx.out), str(sidecar), *(str(v) for v in result.secondary.values())])

    print(f"  ✓ {result.primitive} → {ctx.out}")
    for name, path in result.secondary.items():
        print(f"    {name}: {path}")
    for w in result.warnings:
        print(f"  ⚠ {w['message']}")


# ═══════════════════════════════════════════════════════════════════════════════
# MAIN
# ═══════════════════════════════════════════════════════════════════════════════

def _overrides(args: argparse.Namespace, experiment: dict | None) -> dict[str, Any]:
    values = dict((experiment or {}).get("config") or {})
    for flag, key in TUNING_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[key] = value
    if args.seed is not None:
        values["seed"] = args.seed
    elif experiment and "seed" in experiment:
        values["seed"] = experiment["seed"]
    return values


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    root = Path(args.project_root) if args.project_root else find_project_root()
    runlog = RunLog(command=args.command, config={}, profile=args.profile)
    started = time.perf_counter()
    try:
        experiment = None
        if args.experiment:
            experiment = load_experiment(args.experiment, root)
            if experiment["kind"] != args.command:
                raise ValidationError(f"experiment kind '{experiment['kind']}' does not match '{args.command}'")
        config = load_config(args.config, args.profile, _overrides(args, experiment), root)
        seed = int(config.get("seed", 0) or 0)
        out = Path(args.out) if args.out else None
        if out is None and experiment and (experiment.get("outputs") or {}).get("csv"):
            out = root / experiment["outputs"]["csv"]

        runlog.config, runlog.seed = dict(config.values), seed
        ctx = Context(args, config, root, seed, out, _format_for(args, out), experiment)
        if out is not None:
            print(f"\n─── garden {args.command} ───")
            print(f"   Profile: {args.profile}   Seed: {seed}")
        result = COMMANDS[args.command](ctx)
        emit(ctx, result, time.perf_counter() - started, runlog)

        runlog.add_warnings(result.primitive, result.warnings)
        runlog.summary = result.summary
        runlog.write(root, success=True)
        return 0

    except Exception as e:
        code = exit_code_for(e)
        logger.debug("Failure detail", exc_info=True)
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        try:
            runlog.write(root, success=False, error=str(e), exit_code=code)
        except OSError:
            logger.warning("Could not write the run log")
        return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
