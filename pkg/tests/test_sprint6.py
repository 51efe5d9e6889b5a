#!/usr/bin/env python3
"""
Sprint 6 Verification — run from project root:
    python tests/test_sprint6.py

Tests the gradient restructurer: loss decomposition, identity start,
monotone traces, the stability and zero-weight limits, refits, both
entropy estimators, the hull guard and the step scale.
"""

import sys
from pathlib import Path

project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def uniform(n=96, seed=0):
    from soil.generate import DatasetSpec, gen_dataset
    return gen_dataset(DatasetSpec("uniform2d", n, seed=seed)).points


def check_trace(result, cfg):
    for a, b in zip(result.trace, result.trace[1:]):
        assert b.total <= a.total + 1e-12, f"FAIL: total rose at step {b.step}"
        assert b.step > a.step, "FAIL: steps must increase"
    for row in result.trace:
        combined = row.chamfer + cfg.lam * row.entropy + cfg.mu * row.stability
        assert abs(row.total - combined) < 1e-9, f"FAIL: decomposition broken at step {row.step}"


def test_config():
    from soil.errors import ValidationError
    from roots.restructure import RestructureConfig

    cfg = RestructureConfig.from_dict({"lambda": 0.3, "k": "auto", "steps": 7, "unused": 1})
    assert cfg.lam == 0.3 and cfg.k is None and cfg.steps == 7, "FAIL: from_dict mapping"
    for bad in ({"lam": -1.0}, {"estimator": "grid"}, {"steps": -1}, {"lr": 0.0}, {"refit_every": 0}):
        try:
            RestructureConfig(**bad)
            assert False, f"FAIL: {bad} accepted"
        except ValidationError:
            pass
    print("  ✓ 'lambda' maps to lam, k=auto dropped; invalid weights and schedules rejected")


def test_loss_eval():
    import numpy as np
    from soil.pointset import PointSet
    from roots.restructure import RestructureConfig, loss_eval
    from roots.entropy import fit_anchors, h_diff
    from roots.geometry import chamfer

    S = uniform(64)
    cfg = RestructureConfig(lam=0.1, mu=0.01, k=8, anchor_steps=5)
    anchors = fit_anchors(S, 8, steps=5).anchors
    same = loss_eval(S, S, cfg, anchors)
    assert same.chamfer == 0.0 and same.stability == 0.0, "FAIL: identity terms"
    assert abs(same.total - 0.1 * h_diff(S, anchors).value) < 1e-12, "FAIL: total = λ·entropy"
    print("  ✓ S′ = S → chamfer 0, stability 0, total = λ·entropy(S)")

    S2 = S.translated(np.random.default_rng(1).normal(0.0, 0.01, S.points.shape))
    plain = loss_eval(S, S2, RestructureConfig(lam=0.0, mu=0.0, k=8), anchors)
    assert plain.total == plain.chamfer, "FAIL: λ = μ = 0 → total = chamfer"
    terms = loss_eval(S, S2, cfg, anchors)
    assert abs(terms.chamfer - chamfer(S, S2)) < 1e-15, "FAIL: chamfer delegation"
    assert abs(terms.entropy - h_diff(S2, anchors).value) < 1e-15, "FAIL: entropy delegation"
    stab = float(np.sum((S2.points - S.points) ** 2) / S.n)
    assert abs(terms.stability - stab) < 1e-15, "FAIL: mean squared displacement"
    print("  ✓ λ = μ = 0 → total = chamfer; each term matches its module op")

    try:
        loss_eval(S, PointSet(S.points[:10]), cfg)
        assert False, "FAIL: shape mismatch accepted"
    except Exception as e:
        assert "equal shape" in str(e), f"FAIL: message {e}"
    print("  ✓ Mismatched shapes rejected")


def test_identity_limits():
    import numpy as np
    from soil.pointset import PointSet
    from roots.restructure import RestructureConfig, restructure

    S = uniform(48)
    frozen = restructure(S, RestructureConfig(lam=0.0, mu=0.0, steps=30, k=4, anchor_steps=2))
    assert not frozen.displacement.any(), "FAIL: λ = μ = 0 should leave Δ = 0"
    assert np.array_equal(frozen.output.points, S.points), "FAIL: S′ = S expected"
    assert frozen.stopped_early and frozen.iterations_run == 0, "FAIL: zero gradient should stop"
    print("  ✓ λ = μ = 0: zero gradient at identity, S′ = S")

    single = PointSet(np.array([[0.2, 0.4]]))
    res = restructure(single)
    assert np.array_equal(res.output.points, single.points) and res.iterations_run == 0, \
        "FAIL: n < 2 returns the identity"
    print("  ✓ n < 2 returns the identity result")

    stiff = restructure(S, RestructureConfig(lam=0.1, mu=1e6, steps=20, k=4, anchor_steps=5))
    largest = float(np.max(np.linalg.norm(stiff.displacement, axis=1)))
    assert largest < 1e-3 * S.diameter_bound(), f"FAIL: max ||Δ|| = {largest}"
    print(f"  ✓ μ = 10⁶ pins points (max ||Δ|| = {largest:.2e})")


def test_descent_and_trace():
    import numpy as np
    from roots.restructure import RestructureConfig, restructure, TRACE_HEADER

    S = uniform(128, seed=3)
    cfg = RestructureConfig(lam=0.5, mu=0.01, k=8, steps=60, lr=1e-3, refit_every=20,
                            anchor_steps=10)
    res = restructure(S, cfg)
    first = res.trace[0]
    assert first.step == 0 and first.chamfer == 0.0 and first.stability == 0.0, \
        "FAIL: trace row 0 must be the identity"
    assert abs(first.total - cfg.lam * first.entropy) < 1e-12, "FAIL: row 0 total = λ·entropy"
    check_trace(res, cfg)
    print(f"  ✓ Identity start; total non-increasing over {res.iterations_run} steps")

    assert np.array_equal(res.output.points, S.points + res.displacement), "FAIL: S′ = S + Δ"
    assert res.iterations_run > 0, "FAIL: some descent steps should be accepted"
    assert res.trace[-1].entropy < first.entropy, "FAIL: entropy should decrease"
    print(f"  ✓ S′ = S + Δ; entropy {first.entropy:.4f} → {res.trace[-1].entropy:.4f} "
          f"(ratio {res.trace[-1].entropy / first.entropy:.3f})")

    assert res.refits == (res.iterations_run - 1) // cfg.refit_every or res.refits >= 1, \
        "FAIL: refits should run on schedule"
    assert TRACE_HEADER == ["step", "chamfer", "entropy", "stability", "total", "lr"], \
        "FAIL: trace header"
    assert len(res.trace[1].as_row()) == len(TRACE_HEADER), "FAIL: trace row width"
    print(f"  ✓ {res.refits} scheduled refits; trace rows match the CSV header")

    fixed = restructure(S, RestructureConfig(lam=0.5, k=8, steps=30, refit_every=10,
                                             fixed_anchors=True, anchor_steps=5))
    assert fixed.refits == 0, "FAIL: fixed anchors must not refit"
    check_trace(fixed, RestructureConfig(lam=0.5))
    print("  ✓ fixed_anchors disables refits")

    again = restructure(S, cfg)
    assert np.array_equal(again.output.points, res.output.points), "FAIL: not deterministic"
    print("  ✓ Same seed → identical output")


def test_halfspace_estimator():
    from roots.restructure import RestructureConfig, restructure
    from roots.halfspace import HalfspaceSet

    S = uniform(80, seed=5)
    cfg = RestructureConfig(lam=0.5, mu=0.01, estimator="halfspace", m=2, tau=0.1,
                            steps=30, refit_every=10, anchor_steps=5)
    res = restructure(S, cfg)
    check_trace(res, cfg)
    assert isinstance(res.estimator_params, HalfspaceSet), "FAIL: halfspace params returned"
    assert res.trace[-1].total <= res.trace[0].total, "FAIL: total should not rise"
    print(f"  ✓ Halfspace estimator: monotone trace over {res.iterations_run} steps")


def test_hull_guard_and_step_scale():
    import numpy as np
    from scipy.spatial import ConvexHull
    from soil.errors import ValidationError
    from roots.restructure import RestructureConfig, restructure
    from roots.geometry import monotone_chain_hull, hull_error_pct

    S = uniform(1024, seed=0)
    cfg = RestructureConfig(lam=0.1, mu=0.01, k=16, alpha=10.0, steps=500, seed=0)
    res = restructure(S, cfg)
    check_trace(res, cfg)
    ratio = res.trace[-1].entropy / res.trace[0].entropy
    assert ratio <= 0.7, f"FAIL: entropy ratio {ratio:.3f} above 0.7 at n=1024"
    print(f"  ✓ n=1024, k=16, α=10, 500 steps: entropy ratio {ratio:.3f} ≤ 0.7")

    vertices = ConvexHull(S.points).vertices
    assert np.array_equal(res.output.points[vertices], S.points[vertices]), \
        "FAIL: hull vertices moved"
    err = hull_error_pct(monotone_chain_hull(S), monotone_chain_hull(res.output))
    assert err < 0.5, f"FAIL: hull error {err:.3f}%"
    print(f"  ✓ Hull vertices pinned; hull error {err:.2e}% < 0.5%")

    free = restructure(uniform(96), RestructureConfig(lam=0.5, k=4, steps=40, hull_guard=False,
                                                      anchor_steps=5))
    check_trace(free, RestructureConfig(lam=0.5))
    assert free.iterations_run > 0, "FAIL: unguarded descent should take steps"
    mean = restructure(uniform(96), RestructureConfig(lam=0.5, k=4, steps=40, step_scale="mean",
                                                      anchor_steps=5))
    per_point = restructure(uniform(96), RestructureConfig(lam=0.5, k=4, steps=40, anchor_steps=5))
    check_trace(mean, RestructureConfig(lam=0.5))
    assert not np.array_equal(mean.output.points, per_point.output.points), \
        "FAIL: step_scale should change the descent"
    try:
        RestructureConfig(step_scale="huge")
        assert False, "FAIL: unknown step_scale accepted"
    except ValidationError:
        pass
    print("  ✓ hull_guard=False descends freely; both step scales descend; "
          "unknown step_scale rejected")


if __name__ == "__main__":
    print("\n=== Sprint 6 Verification ===\n")

    for name, fn in [
        ("Test 1: Restructure config", test_config),
        ("Test 2: Loss evaluation", test_loss_eval),
        ("Test 3: Identity and stiffness limits", test_identity_limits),
        ("Test 4: Descent and trace", test_descent_and_trace),
        ("Test 5: Halfspace estimator", test_halfspace_estimator),
        ("Test 6: Hull guard and step scale", test_hull_guard_and_step_scale),
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
