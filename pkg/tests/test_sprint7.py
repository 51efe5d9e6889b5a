#!/usr/bin/env python3
"""
Sprint 7 Verification — run from project root:
    python tests/test_sprint7.py

Tests the bench layer and the garden CLI: statistics, deterministic SVG,
record headers, speedup/correlation/ablation runners at test scale, the
acceptance-scale bench, ablation directions and correlation, and end-to-end
subcommands with envelopes and exit codes.
"""

import sys
import math
import tempfile
from pathlib import Path

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def profile_params():
    from canopy.config import load_config
    return dict(load_config(None, "test", {}, project_root).values)


def test_stats():
    import numpy as np
    from scipy import stats as sps
    from soil.errors import ValidationError
    from canopy.bench.stats import paired_ttest, r_squared, two_sided_p, mean_std, ci95

    assert abs(two_sided_p(2.262, 9) - 0.05) < 1e-3, "FAIL: t=2.262, df=9 → p ≈ 0.05"
    assert two_sided_p(0.0, 5) == 1.0 or abs(two_sided_p(0.0, 5) - 1.0) < 1e-9, "FAIL: t=0 → p=1"
    print("  ✓ t = 2.262 with 9 degrees of freedom → p ≈ 0.05")

    rng = np.random.default_rng(0)
    a = rng.normal(10.0, 1.0, 12)
    b = a - rng.normal(0.5, 0.4, 12)
    ours = paired_ttest(a, b)
    ref = sps.ttest_rel(a, b)
    assert ours.df == 11 and abs(ours.t - ref.statistic) < 1e-9, "FAIL: t statistic"
    assert abs(ours.p_value - ref.pvalue) < 1e-6, f"FAIL: p {ours.p_value} vs {ref.pvalue}"
    print("  ✓ paired_ttest agrees with scipy.stats.ttest_rel")

    same = paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert same.t == 0.0 and same.p_value == 1.0 and same.degenerate, "FAIL: zero differences"
    shifted = paired_ttest([2.0, 3.0, 4.0], [1.0, 2.0, 3.0])
    assert shifted.p_value == 0.0 and math.isinf(shifted.t) and shifted.degenerate, \
        "FAIL: constant nonzero difference"
    assert shifted.warnings("bench")[0]["level"] == "warning", "FAIL: degenerate warning"
    print("  ✓ Zero-spread conventions: all-zero → p=1, constant shift → p=0 (flagged)")

    x = np.arange(10.0)
    assert abs(r_squared(x, 2 * x + 1).r_squared - 1.0) < 1e-12, "FAIL: perfect fit"
    anti = r_squared(x, -x)
    assert anti.r_squared == 0.0 and abs(anti.r_squared_raw + 1.0) < 1e-12, "FAIL: negative clamp"
    noisy = x + rng.normal(0.0, 2.0, 10)
    r = np.corrcoef(x, noisy)[0, 1]
    assert abs(r_squared(x, noisy).r_squared - r * r) < 1e-12, "FAIL: R² = r²"
    assert r_squared([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]).degenerate, "FAIL: constant series"
    print("  ✓ R²: perfect fit 1, anti-correlation clamped at 0, equals r² otherwise")

    mean, std = mean_std([2.0, 4.0, 6.0])
    assert mean == 4.0 and abs(std - 2.0) < 1e-12, "FAIL: mean_std"
    lo, hi = ci95([2.0, 4.0, 6.0])
    assert abs((hi - lo) / 2 - 1.96 * 2.0 / math.sqrt(3)) < 1e-12, "FAIL: ci95 half-width"
    for bad in (lambda: paired_ttest([1.0], [2.0]), lambda: paired_ttest([1.0, 2.0], [1.0])):
        try:
            bad()
            assert False, "FAIL: bad series accepted"
        except ValidationError:
            pass
    print("  ✓ mean ± std, 95% CI, and series validation")


def test_svg_and_records():
    import numpy as np
    from soil.errors import ValidationError
    from canopy.bench.figures import emit_svg_scatter, padded_range
    from canopy.bench.records import (BENCH_HEADER, MAXIMA_HEADER, ABLATION_HEADER,
                                      CORRELATION_HEADER, BenchRecord, write_bench_csv)
    from soil.io import read_csv_rows

    pts = np.random.default_rng(2).random((30, 2))
    labels = np.arange(30) % 3
    first = emit_svg_scatter(pts, labels, ("H_diff", "oracle"), title="check")
    second = emit_svg_scatter(pts, labels, ("H_diff", "oracle"), title="check")
    assert first == second, "FAIL: SVG output should be byte-identical"
    assert "<svg" in first and "H_diff" in first, "FAIL: SVG content"
    lo, hi = padded_range(np.array([0.0, 10.0]))
    assert (lo, hi) == (-0.5, 10.5), "FAIL: 5% padding"
    assert padded_range(np.array([3.0])) == (2.5, 3.5), "FAIL: single value padding"
    try:
        emit_svg_scatter(np.zeros((4, 3)))
        assert False, "FAIL: 3-D input accepted"
    except ValidationError:
        pass
    print("  ✓ SVG scatter is deterministic with 5% padded axes")

    assert BENCH_HEADER[:4] == ["dataset", "method", "n", "seed"], "FAIL: bench header"
    assert "maxima_f1" in MAXIMA_HEADER and "hull_error_pct" not in MAXIMA_HEADER, "FAIL: maxima header"
    assert ABLATION_HEADER[0] == "factor" and CORRELATION_HEADER[-1] == "oracle_entropy", \
        "FAIL: ablation / correlation headers"

    rec = BenchRecord("uniform2d", "raw", 100, 0, op_counts=[10, 14], hull_errors=[0.0, 0.0])
    assert rec.trials == 2 and rec.op_count_mean == 12.0, "FAIL: record means"
    assert rec.runtime_ns_mean is None, "FAIL: no timing → runtime empty"
    with tempfile.TemporaryDirectory() as tmp:
        path = write_bench_csv(Path(tmp) / "bench.csv", [rec])
        header, rows = read_csv_rows(path)
        assert header == BENCH_HEADER and len(rows) == 1, "FAIL: bench CSV layout"
        assert rows[0][6] == "", "FAIL: missing runtime written as an empty cell"
    print("  ✓ Fixed CSV headers; missing values written as empty cells")


def test_speedup_bench():
    from soil.errors import ValidationError
    from soil.generate import DatasetSpec
    from canopy.bench.records import BENCH_HEADER
    from canopy.bench.runners import BenchSettings, run_speedup_bench

    params = profile_params()
    settings = BenchSettings(trials=2)
    outcome = run_speedup_bench(
        [DatasetSpec("blobs2d", 256, 0, {"blobs": 4})],
        ["raw", "heuristic_sort", "chan", "adaptive"], params, settings,
    )
    dataset = "blobs2d_blobs4"
    raw = outcome.record(dataset, "raw")
    assert raw.speedup == 1.0 and raw.trials == 2, "FAIL: raw baseline speedup is 1"
    for method in ("heuristic_sort", "chan", "adaptive"):
        rec = outcome.record(dataset, method)
        assert rec.hull_error_pct < 1e-9, f"FAIL: {method} should be exact"
        assert rec.hausdorff == 0.0, f"FAIL: {method} hull vertices differ"
        assert rec.speedup is not None and rec.speedup > 0, f"FAIL: {method} speedup"
        assert len(rec.as_row()) == len(BENCH_HEADER), "FAIL: row width"
    assert set(outcome.tests[dataset]) == {"heuristic_sort", "chan", "adaptive"}, \
        "FAIL: one paired test per non-raw method"
    print(f"  ✓ Exact methods keep 0% hull error; adaptive speedup "
          f"{outcome.record(dataset, 'adaptive').speedup:.2f}×")

    again = run_speedup_bench([DatasetSpec("blobs2d", 256, 0, {"blobs": 4})],
                              ["raw", "adaptive"], params, settings)
    assert again.record(dataset, "adaptive").op_counts == \
        outcome.record(dataset, "adaptive").op_counts, "FAIL: op counts not reproducible"
    print("  ✓ Same seed → identical op counts")

    moved = run_speedup_bench([DatasetSpec("uniform2d", 64, 1)],
                              ["restructure+adaptive"], params, settings)
    rec = moved.record("uniform2d", "restructure+adaptive")
    assert rec.entropy_before is not None and rec.entropy_after is not None, "FAIL: entropies"
    assert rec.hull_error_pct is not None and rec.hull_error_pct >= 0.0, "FAIL: hull error"
    print(f"  ✓ restructure+adaptive reports hull error {rec.hull_error_pct:.3f}% and entropies")

    maxima = run_speedup_bench([DatasetSpec("pareto3d", 300, 0)], ["raw", "adaptive"], params,
                               BenchSettings(task="maxima", trials=2))
    assert maxima.record("pareto3d", "adaptive").as_maxima_row()[9] == 1.0, "FAIL: maxima F1"
    print("  ✓ Maxima bench: adaptive maxima F1 = 1")

    for bad in (lambda: BenchSettings(trials=1),
                lambda: BenchSettings(metric="runtime"),
                lambda: run_speedup_bench([DatasetSpec("uniform2d", 10, 0)], ["magic"], params, settings)):
        try:
            bad()
            assert False, "FAIL: invalid bench accepted"
        except ValidationError:
            pass
    print("  ✓ trials < 2, runtime without timing, unknown methods rejected")


def test_correlation_and_ablation():
    from soil.errors import ValidationError
    from soil.generate import DatasetSpec
    from canopy.bench.records import ABLATION_HEADER
    from canopy.bench.runners import (BenchSettings, run_correlation, run_ablation,
                                      check_correlation_acceptance)

    params = profile_params()
    corr = run_correlation(12, [1, 2, 4, 8], n=12, params=params, seed=0)
    assert len(corr.rows) == 12, "FAIL: one row per instance"
    assert [r.blobs for r in corr.rows[:4]] == [1, 2, 4, 8], "FAIL: levels cycle"
    assert all(r.oracle_entropy >= 0.0 for r in corr.rows), "FAIL: oracle entropy"
    assert corr.stats.r_squared > 0.5, f"FAIL: R² {corr.stats.r_squared}"
    assert 0.0 <= corr.control.r_squared <= 1.0, "FAIL: control R²"
    checks = check_correlation_acceptance(corr, {"min_r2": 0.5})
    assert checks[0].passed, "FAIL: acceptance check"
    print(f"  ✓ Correlation R² {corr.stats.r_squared:.3f} (control {corr.control.r_squared:.3f})")

    try:
        run_correlation(5, [1, 2], params=params)
        assert False, "FAIL: fewer than 10 instances accepted"
    except ValidationError:
        pass

    ablation = run_ablation([DatasetSpec("blobs2d", 64, 0, {"blobs": 4})],
                            {"lambdas": [0.0, 0.5]}, params, BenchSettings(trials=2))
    assert [r.value for r in ablation.rows] == [0.0, 0.5], "FAIL: one row per value"
    assert all(r.factor == "lambda" and len(r.as_row()) == len(ABLATION_HEADER)
               for r in ablation.rows), "FAIL: ablation rows"
    assert ablation.mean_speedup("lambda", 0.5) > 0.0, "FAIL: mean speedup"
    try:
        run_ablation([DatasetSpec("uniform2d", 16, 0)], {"colours": [1]}, params, BenchSettings())
        assert False, "FAIL: unknown grid accepted"
    except ValidationError:
        pass
    print("  ✓ Ablation: one row per factor value, unknown grids rejected")


def test_cli():
    from canopy.cli.garden import run
    from roots.restructure import TRACE_HEADER
    from canopy.envelope import read_envelope, sidecar_path
    from soil.io import read_points, read_json

    root = ["--project-root", str(project_root), "--profile", "test"]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        pts = tmp / "pts.csv"
        code = run(["gen", "--kind", "blobs2d", "--n", "40", "--param", "blobs=4",
                    "--seed", "3", "--out", str(pts), *root])
        assert code == 0 and pts.exists(), "FAIL: gen"
        assert (tmp / "pts.labels.csv").exists(), "FAIL: labels sibling"
        assert read_points(pts).n == 40, "FAIL: gen size"
        env = read_envelope(sidecar_path(pts), project_root=project_root)
        assert env.provenance[-1].primitive == "gen_dataset", "FAIL: envelope primitive"
        print("  ✓ gen writes points, labels and an envelope sidecar")

        for algorithm in ("monotone_chain", "chan"):
            out = tmp / f"hull_{algorithm}.csv"
            assert run(["hull", "--in", str(pts), "--algorithm", algorithm,
                        "--out", str(out), *root]) == 0, f"FAIL: hull {algorithm}"
        assert sorted(read_points(tmp / "hull_chan.csv").points.tolist()) == \
            sorted(read_points(tmp / "hull_monotone_chain.csv").points.tolist()), "FAIL: hulls differ"
        merged = tmp / "hull_merge.json"
        assert run(["hull", "--in", str(pts), "--algorithm", "partition_merge",
                    "--labels", str(tmp / "pts.labels.csv"), "--out", str(merged), *root]) == 0
        assert read_json(merged)["algorithm"] == "partition_merge", "FAIL: JSON hull"
        print("  ✓ hull: chan and monotone chain agree; partition_merge reads labels")

        trace_out = tmp / "moved.csv"
        assert run(["restructure", "--in", str(pts), "--out", str(trace_out), *root]) == 0
        assert (tmp / "moved.trace.csv").exists(), "FAIL: trace sibling"
        chosen = tmp / "steps.csv"
        assert run(["restructure", "--in", str(pts), "--out", str(tmp / "moved2.csv"),
                    "--trace", str(chosen), *root]) == 0, "FAIL: restructure --trace"
        assert chosen.read_text().splitlines()[0].split(",") == TRACE_HEADER, "FAIL: trace header"
        assert not (tmp / "moved2.trace.csv").exists(), "FAIL: --trace should replace the sibling"
        print("  ✓ restructure writes S′ plus its trace; --trace picks the trace path")

        assert run(["oracle", "--in", str(pts), *root]) == 4, "FAIL: n > 15 → exit 4"
        assert run(["entropy", "--in", str(pts), "--alpha", "-1", *root]) == 2, \
            "FAIL: negative alpha → exit 2"
        assert run(["hull", "--in", str(tmp / "missing.csv"), *root]) == 2, \
            "FAIL: missing input → exit 2"
        print("  ✓ Exit codes: size guard 4, validation 2, missing file 2")

        small = tmp / "small.csv"
        assert run(["gen", "--kind", "uniform2d", "--n", "8", "--out", str(small), *root]) == 0
        part = tmp / "part.json"
        assert run(["oracle", "--in", str(small), "--out", str(part), *root]) == 0
        assert read_json(part)["entropy_normalized"] >= 0.0, "FAIL: oracle payload"
        print("  ✓ oracle on n=8 writes a partition JSON")


def test_acceptance_scale():
    from soil.generate import DatasetSpec
    from canopy.config import load_config
    from canopy.bench.runners import (BenchSettings, run_speedup_bench, run_ablation,
                                      run_correlation, check_bench_acceptance,
                                      check_correlation_acceptance, check_ablation_acceptance)

    params = dict(load_config(None, "full", {}, project_root).values)
    outcome = run_speedup_bench([DatasetSpec("uniform2d", 4096, 0)],
                                ["raw", "restructure+adaptive"], params, BenchSettings(trials=5))
    checks = check_bench_acceptance(outcome, {"min_speedup": 1.25, "max_hull_error_pct": 0.5,
                                              "max_entropy_ratio": 0.7, "max_p_value": 0.05})
    assert len(checks) == 4, f"FAIL: expected four acceptance checks, got {len(checks)}"
    for check in checks:
        assert check.passed, f"FAIL: {check.name} observed {check.observed} vs {check.threshold}"
    rec = outcome.record("uniform2d", "restructure+adaptive")
    print(f"  ✓ uniform2d n=4096, 5 trials: speedup {rec.speedup:.2f}×, hull error "
          f"{rec.hull_error_pct:.3f}%, entropy ratio {rec.entropy_after / rec.entropy_before:.3f}")

    ablation = run_ablation([DatasetSpec("uniform2d", 1024, 0)],
                            {"alphas": [1.0, 10.0], "inits": ["kmeanspp", "random"]},
                            params, BenchSettings(trials=5))
    for check in check_ablation_acceptance(ablation, {"speedup_ordering": [
            ["alpha", 10.0, 1.0], ["anchor_init", "kmeanspp", "random"]]}):
        assert check.passed, f"FAIL: {check.name} ({check.observed})"
    print(f"  ✓ Ablation at n=1024: α=10 {ablation.mean_speedup('alpha', 10.0):.3f}× ≥ "
          f"α=1 {ablation.mean_speedup('alpha', 1.0):.3f}×; kmeanspp "
          f"{ablation.mean_speedup('anchor_init', 'kmeanspp'):.3f}× ≥ random "
          f"{ablation.mean_speedup('anchor_init', 'random'):.3f}×")

    corr = run_correlation(50, list(range(1, 9)), n=12, params=params, seed=0)
    for check in check_correlation_acceptance(corr, {"min_r2": 0.85, "max_control_r2": 0.2}):
        assert check.passed, f"FAIL: {check.name} {check.observed} vs {check.threshold}"
    print(f"  ✓ 50 blob instances, n=12: R² {corr.stats.r_squared:.3f} ≥ 0.85, "
          f"control {corr.control.r_squared:.3f} < 0.2")


if __name__ == "__main__":
    print("\n=== Sprint 7 Verification ===\n")

    for name, fn in [
        ("Test 1: Statistics", test_stats),
        ("Test 2: SVG and records", test_svg_and_records),
        ("Test 3: Speedup bench", test_speedup_bench),
        ("Test 4: Correlation and ablation", test_correlation_and_ablation),
        ("Test 5: garden CLI", test_cli),
        ("Test 6: Acceptance-scale runs", test_acceptance_scale),
    ]:
        print(name)
        try:
            fn()
            print("  PASSED\n")
        except Exception as e:
            print(f"  FAILED: {e}\n")
            import traceback
            traceback.print_exc()
            print()

    print("=== Done ===")
