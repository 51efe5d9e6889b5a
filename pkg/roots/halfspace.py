"""
roots/halfspace.py

Halfspace-aware soft entropy. m soft halfspace indicators

    h_t(x) = sigmoid((w_t . x - b_t) / tau)

gate the data-realized sign-pattern cells of the arrangement,

    g_j(x) ∝ prod_t h_t(x)^{a_jt} (1 - h_t(x))^{1 - a_jt},

and the entropy of the soft cell masses q_j = mean_i g_j(x_i) replaces the
ball-based H_diff. Also here: the empirical margin, hard cell masses, the
data-dependent bound report, hyperplane initialisers, the fitted estimator,
tau selection by bound minimisation, the signed-distance assignment variant
and a probe of the entropy-continuity step.

Gating is computed in log-space throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from soil.errors import NumericalError, ValidationError
from soil.generate import derive_rng
from soil.pointset import HardPartition, PointSet

from .entropy import PROB_FLOOR, EntropyReport, SoftAssignment, entropy_of_masses

logger = logging.getLogger("roots.halfspace")

STRATEGIES = ("principal", "maxmargin", "random")


# ═══════════════════════════════════════════════════════════════════════════════
# TYPES
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HalfspaceSet:
    """m hyperplanes (w_t, b_t) with temperature tau."""
    w: np.ndarray
    b: np.ndarray
    tau: float

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64)).reshape(-1)
        if w.shape[0] < 1 or w.shape[0] != b.shape[0]:
            raise ValidationError(
                f"Need m ≥ 1 hyperplanes with one offset each; got w {w.shape}, b {b.shape}."
            )
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ValidationError("Hyperplane parameters contain non-finite values.")
        norms = np.linalg.norm(w, axis=1)
        if (norms <= 0).any():
            raise ValidationError(f"Hyperplane {int(np.argmin(norms))} has a zero normal.")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError(f"tau must be a finite positive real, got {self.tau}.")
        w, b = w.copy(), b.copy()
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def m(self) -> int:
        return int(self.w.shape[0])

    @property
    def d(self) -> int:
        return int(self.w.shape[1])

    def with_tau(self, tau: float) -> "HalfspaceSet":
        return HalfspaceSet(self.w, self.b, tau)

    def unit_normalized(self) -> "HalfspaceSet":
        norms = np.linalg.norm(self.w, axis=1)
        return HalfspaceSet(self.w / norms[:, None], self.b / norms, self.tau)

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b.tolist(), "tau": self.tau}

    @classmethod
    def from_dict(cls, data: dict) -> "HalfspaceSet":
        try:
            return cls(np.array(data["w"], dtype=np.float64),
                       np.array(data["b"], dtype=np.float64),
                       float(data["tau"]))
        except KeyError as e:
            raise ValidationError(f"Halfspace JSON is missing key {e}.") from e


@dataclass(frozen=True)
class CellGating:
    """Realized sign-pattern codes (K×m, lexicographic) and their soft masses."""
    codes: np.ndarray
    soft_masses: np.ndarray
    on_boundary: bool = False

    @property
    def K(self) -> int:
        return int(self.codes.shape[0])


@dataclass(frozen=True)
class BoundReport:
    empirical_margin: float
    eps_smooth: float
    lipschitz: float
    rademacher: float
    delta: float
    slack: float
    epsilon_total: float
    bound: float
    constant_C: float
    K: int
    n: int
    d: int
    m: int
    tau: float
    vacuous_bound: bool = False

    def to_dict(self) -> dict:
        return {
            "empirical_margin": self.empirical_margin,
            "eps_smooth": self.eps_smooth,
            "lipschitz": self.lipschitz,
            "rademacher": self.rademacher,
            "delta": self.delta,
            "slack": self.slack,
            "epsilon_total": self.epsilon_total,
            "bound": self.bound,
            "constant_C": self.constant_C,
            "K": self.K,
            "n": self.n,
            "d": self.d,
            "m": self.m,
            "tau": self.tau,
            "vacuous_bound": self.vacuous_bound,
        }


# ═══════════════════════════════════════════════════════════════════════════════
# INDICATORS AND GATES
# ═══════════════════════════════════════════════════════════════════════════════

def soft_halfspace(x: np.ndarray, w: np.ndarray, b: float, tau: float) -> float:
    w = np.asarray(w, dtype=np.float64)
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau}.")
    if not np.linalg.norm(w) > 0:
        raise ValidationError("Hyperplane normal must be non-zero.")
    return float(expit((float(np.dot(w, x)) - b) / tau))


def _check_dims(S: PointSet, H: HalfspaceSet) -> None:
    if S.d != H.d:
        raise ValidationError(f"Dimension mismatch: points have d={S.d}, hyperplanes have d={H.d}.")


def _scores(X: np.ndarray, H: HalfspaceSet) -> np.ndarray:
    return (X @ H.w.T - H.b[None, :]) / H.tau


def _log_gates(X: np.ndarray, codes: np.ndarray, H: HalfspaceSet) -> tuple[np.ndarray, np.ndarray]:
    """(normalized gates n×K, sigmoid values n×m)."""
    s = _scores(X, H)
    A = codes.astype(np.float64)
    L = log_expit(s) @ A.T + log_expit(-s) @ (1.0 - A).T
    G = np.exp(L - logsumexp(L, axis=1, keepdims=True))
    return G, expit(s)


def cell_gates(x: np.ndarray, G: CellGating, H: HalfspaceSet) -> np.ndarray:
    gates, _ = _log_gates(np.atleast_2d(np.asarray(x, dtype=np.float64)), G.codes, H)
    return gates[0]


def _sign_codes(X: np.ndarray, H: HalfspaceSet) -> tuple[np.ndarray, bool]:
    raw = X @ H.w.T - H.b[None, :]
    return (raw >= 0).astype(np.int8), bool((raw == 0).any())


def enumerate_cells(S: PointSet, H: HalfspaceSet) -> CellGating:
    _check_dims(S, H)
    signs, on_boundary = _sign_codes(S.points, H)
    codes = np.unique(signs, axis=0)
    if on_boundary:
        logger.warning("enumerate_cells: point(s) lie exactly on a hyperplane; assigned the nonnegative side")
    gates, _ = _log_gates(S.points, codes, H)
    return CellGating(codes=codes, soft_masses=gates.mean(axis=0), on_boundary=on_boundary)


# ═══════════════════════════════════════════════════════════════════════════════
# H_soft
# ═══════════════════════════════════════════════════════════════════════════════

def h_soft(S: PointSet, H: HalfspaceSet, G: CellGating, with_grad: bool = False) -> EntropyReport:
    """Entropy of the soft cell masses, with gradients w.r.t. points, w and b."""
    _check_dims(S, H)
    X = S.points
    gates, h = _log_gates(X, G.codes, H)
    q = gates.mean(axis=0)
    value = entropy_of_masses(q)
    if not with_grad:
        return EntropyReport(value=value)

    gamma = -(np.log(np.maximum(q, PROB_FLOOR)) + 1.0)
    U = gates * (gamma[None, :] - (gates @ gamma)[:, None]) / S.n
    A = G.codes.astype(np.float64)
    # dH/ds_it = sum_j U_ij (A_jt - h_it)
    V = U @ A - h * U.sum(axis=1, keepdims=True)
    grad_points = (V @ H.w) / H.tau
    grad_w = (V.T @ X) / H.tau
    grad_b = -V.sum(axis=0) / H.tau

    for name, grad in (("point", grad_points), ("w", grad_w), ("b", np.atleast_2d(grad_b).T)):
        bad = ~np.isfinite(grad)
        if bad.any():
            idx = int(np.argwhere(bad)[0][0])
            raise NumericalError(f"Non-finite H_soft gradient at {name} index {idx}.", index=idx)
    return EntropyReport(value=value, grad_points=grad_points,
                         grad_params={"w": grad_w, "b": grad_b})


def empirical_margin(S: PointSet, H: HalfspaceSet) -> float:
    _check_dims(S, H)
    raw = np.abs(S.points @ H.w.T - H.b[None, :])
    return float(np.min(raw / np.linalg.norm(H.w, axis=1)[None, :]))


def hard_masses(S: PointSet, G: CellGating, H: HalfspaceSet) -> HardPartition:
    """Assign every point to its sign-pattern cell (boundary → nonnegative side)."""
    _check_dims(S, H)
    signs, _ = _sign_codes(S.points, H)
    lookup = {tuple(code.tolist()): j for j, code in enumerate(G.codes)}
    try:
        labels = np.array([lookup[tuple(row.tolist())] for row in signs], dtype=np.int64)
    except KeyError as e:
        raise ValidationError(f"Point sign pattern {e} is not among the gating codes.") from e
    return HardPartition(labels)


# ═══════════════════════════════════════════════════════════════════════════════
# BOUND REPORT
# ═══════════════════════════════════════════════════════════════════════════════

def bound_terms(
    margin: float, tau: float, n: int, d: int, m: int, K: int,
    delta: float = 0.05, C: float = 1.0, asymptotic: bool = False,
) -> BoundReport:
    """Right-hand side of the data-dependent bound from its empirical ingredients.

    asymptotic=True drops the Rademacher and confidence terms (n → ∞).
    """
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}.")
    if not C > 0:
        raise ValidationError(f"constant C must be > 0, got {C}.")
    if not tau > 0:
        raise ValidationError(f"tau must be > 0, got {tau}.")
    eps_smooth = math.exp(-margin / (4.0 * tau))
    lipschitz = 1.0 / (4.0 * tau)
    if asymptotic:
        rademacher, slack = 0.0, 0.0
    else:
        rademacher = C * lipschitz * math.sqrt(d * math.log(m) / n) if m > 1 else 0.0
        slack = math.sqrt(math.log(2.0 / delta) / (2.0 * n))
    eps = eps_smooth + 2.0 * rademacher + slack

    vacuous = False
    if eps <= 0:
        bound = 0.0
    elif eps < K:
        bound = eps * math.log(K / eps)
    else:
        vacuous = True
        bound = max(0.0, eps * math.log(K))
    return BoundReport(
        empirical_margin=margin, eps_smooth=eps_smooth, lipschitz=lipschitz,
        rademacher=rademacher, delta=delta, slack=slack, epsilon_total=eps,
        bound=bound, constant_C=C, K=K, n=n, d=d, m=m, tau=tau, vacuous_bound=vacuous,
    )


def evaluate_bound(
    S: PointSet, H: HalfspaceSet, G: CellGating,
    delta: float = 0.05, C: float = 1.0, asymptotic: bool = False,
) -> BoundReport:
    report = bound_terms(empirical_margin(S, H), H.tau, S.n, S.d, H.m, G.K, delta, C, asymptotic)
    if report.vacuous_bound:
        logger.info(f"evaluate_bound: epsilon_total={report.epsilon_total:.4g} ≥ K={G.K}; bound is vacuous")
    return report


def select_tau(
    S: PointSet, H: HalfspaceSet, taus: Sequence[float],
    delta: float = 0.05, C: float = 1.0,
) -> tuple[float, BoundReport]:
    """Temperature from the grid with the smallest non-vacuous bound (ties → smaller tau)."""
    if len(taus) == 0:
        raise ValidationError("tau grid is empty.")
    G = enumerate_cells(S, H)
    margin = empirical_margin(S, H)
    reports = [bound_terms(margin, t, S.n, S.d, H.m, G.K, delta, C) for t in sorted(taus)]
    best = min(reports, key=lambda r: (r.vacuous_bound, r.bound, r.tau))
    return best.tau, best


# ═══════════════════════════════════════════════════════════════════════════════
# INITIALISATION
# ═══════════════════════════════════════════════════════════════════════════════

def _principal_directions(X: np.ndarray) -> np.ndarray:
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / max(1, X.shape[0] - 1)
    if not np.any(cov > 0):
        raise ValidationError(
            "degenerate covariance: all points coincide, so no hyperplane direction is defined."
        )
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    return vectors[:, order].T


def _widest_gaps(proj: np.ndarray) -> list[tuple[float, float, bytes]]:
    order = np.argsort(proj, kind="stable")
    sorted_p = proj[order]
    gaps = np.diff(sorted_p)
    out = []
    for idx in np.argsort(gaps, kind="stable")[::-1][:4]:
        if gaps[idx] <= 0:
            continue
        mid = 0.5 * (sorted_p[idx] + sorted_p[idx + 1])
        out.append((float(gaps[idx]), float(mid), (proj >= mid).tobytes()))
    return out


def init_halfspaces(
    S: PointSet, m: int, strategy: str = "principal", seed: int = 0, tau: float = 0.25,
) -> HalfspaceSet:
    if m < 1:
        raise ValidationError(f"m must be ≥ 1, got {m}.")
    if strategy not in STRATEGIES:
        raise ValidationError(f"Unknown strategy '{strategy}'; expected one of {STRATEGIES}.")
    X = S.points
    rng = derive_rng(seed)

    if strategy == "random":
        _principal_directions(X)
        w = rng.normal(size=(m, S.d))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        b = np.median(X @ w.T, axis=0)
        return HalfspaceSet(w, b, tau)

    dirs = _principal_directions(X)
    if strategy == "principal":
        rows, offsets = [], []
        uses = [0] * S.d
        for t in range(m):
            uses[t % S.d] += 1
        seen = [0] * S.d
        for t in range(m):
            axis = t % S.d
            seen[axis] += 1
            u = dirs[axis]
            rows.append(u)
            offsets.append(float(np.quantile(X @ u, seen[axis] / (uses[axis] + 1))))
        return HalfspaceSet(np.array(rows), np.array(offsets), tau)

    # maxmargin: widest gaps of 1-D projections along axes, principal and sampled directions
    candidates_dirs = np.vstack([np.eye(S.d), dirs, rng.normal(size=(32, S.d))])
    candidates_dirs /= np.linalg.norm(candidates_dirs, axis=1, keepdims=True)
    candidates = []
    for u in candidates_dirs:
        for gap, mid, mask in _widest_gaps(X @ u):
            candidates.append((gap, u, mid, mask))
    candidates.sort(key=lambda c: -c[0])

    chosen_w, chosen_b, masks = [], [], set()
    for gap, u, mid, mask in candidates:
        flipped = (~np.frombuffer(mask, dtype=bool)).tobytes()
        if mask in masks or flipped in masks:
            continue
        masks.add(mask)
        chosen_w.append(u)
        chosen_b.append(mid)
        if len(chosen_w) == m:
            break
    while len(chosen_w) < m:
        u = dirs[len(chosen_w) % S.d]
        chosen_w.append(u)
        chosen_b.append(float(np.median(X @ u)))
    return HalfspaceSet(np.array(chosen_w), np.array(chosen_b), tau)


# ═══════════════════════════════════════════════════════════════════════════════
# FITTED ESTIMATOR
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HalfspaceFit:
    report: EntropyReport
    halfspaces: HalfspaceSet
    cells: CellGating
    trace: list[float] = field(default_factory=list)


def _soft_loss(S: PointSet, H: HalfspaceSet) -> tuple[float, CellGating]:
    G = enumerate_cells(S, H)
    return h_soft(S, H, G).value, G


def h_diff_half(
    S: PointSet,
    m: int = 2,
    tau: float = 0.25,
    strategy: str = "principal",
    steps: int = 0,
    lr: float = 0.05,
    seed: int = 0,
    warm_start: HalfspaceSet | None = None,
) -> HalfspaceFit:
    """Initialise hyperplanes, optionally descend (w, b) on H_soft, renormalize w each step."""
    if steps < 0:
        raise ValidationError(f"steps must be ≥ 0, got {steps}.")
    H = warm_start if warm_start is not None else init_halfspaces(S, m, strategy, seed, tau)
    H = H.unit_normalized()
    value, G = _soft_loss(S, H)
    trace = [value]

    for step in range(steps):
        grads = h_soft(S, H, G, with_grad=True).grad_params
        gw, gb = grads["w"], grads["b"]
        if float(np.sqrt(np.sum(gw * gw) + np.sum(gb * gb))) < 1e-12:
            break
        rate = lr
        accepted = False
        for _ in range(21):
            try:
                candidate = HalfspaceSet(H.w - rate * gw, H.b - rate * gb, H.tau).unit_normalized()
            except ValidationError:
                rate *= 0.5
                continue
            new_value, new_G = _soft_loss(S, candidate)
            if not math.isfinite(new_value):
                raise NumericalError(f"H_soft became non-finite at step {step}.", step=step)
            if new_value <= value:
                accepted = True
                break
            rate *= 0.5
        if not accepted:
            logger.debug(f"h_diff_half: no descent after 20 halvings at step {step}; stopping")
            break
        H, G, value = candidate, new_G, new_value
        trace.append(value)

    return HalfspaceFit(report=h_soft(S, H, G), halfspaces=H, cells=G, trace=trace)


# ═══════════════════════════════════════════════════════════════════════════════
# SIGNED-DISTANCE ASSIGNMENTS
# ═══════════════════════════════════════════════════════════════════════════════

def hyperplane_assignments(
    S: PointSet, normals: np.ndarray, offsets: np.ndarray, alpha: float,
) -> SoftAssignment:
    """p_ij ∝ exp(-alpha |n_j . x_i + b_j|): membership by proximity to hyperplane j."""
    N = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    if N.shape[1] != S.d:
        raise ValidationError(f"Dimension mismatch: points d={S.d}, normals d={N.shape[1]}.")
    z = -alpha * np.abs(S.points @ N.T + np.asarray(offsets, dtype=np.float64)[None, :])
    P = np.maximum(np.exp(z - logsumexp(z, axis=1, keepdims=True)), PROB_FLOOR)
    return SoftAssignment(matrix=P, masses=P.sum(axis=0) / S.n, alpha_eff=alpha)


def h_diff_signed(
    S: PointSet, normals: np.ndarray, offsets: np.ndarray, alpha: float, with_grad: bool = False,
) -> EntropyReport:
    sa = hyperplane_assignments(S, normals, offsets, alpha)
    value = entropy_of_masses(sa.masses)
    if not with_grad:
        return EntropyReport(value=value)
    N = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    s = S.points @ N.T + np.asarray(offsets, dtype=np.float64)[None, :]
    P = sa.matrix
    g = -(np.log(np.maximum(sa.masses, PROB_FLOOR)) + 1.0)
    U = P * (g[None, :] - (P @ g)[:, None]) / S.n
    W = -alpha * U * np.sign(s)
    return EntropyReport(
        value=value,
        grad_points=W @ N,
        grad_params={"normals": W.T @ S.points, "offsets": W.sum(axis=0)},
    )


# ═══════════════════════════════════════════════════════════════════════════════
# CONTINUITY PROBE
# ═══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class ContinuityProbe:
    samples: int
    violations: int
    worst_excess: float
    examples: list[dict] = field(default_factory=list)


def continuity_probe(K: int, samples: int = 1000, seed: int = 0, concentration: float = 0.3) -> ContinuityProbe:
    """Sample simplex pairs and test |H(p) - H(q)| ≤ t log(K/t), t = ||p - q||_1.

    Violations are logged and counted; nothing is raised.
    """
    if K < 2:
        raise ValidationError(f"K must be ≥ 2 for the continuity probe, got {K}.")
    rng = derive_rng(seed, K)
    violations, worst, examples = 0, 0.0, []
    for s in range(samples):
        p = rng.dirichlet(np.full(K, concentration))
        q = rng.dirichlet(np.full(K, concentration))
        t = float(np.sum(np.abs(p - q)))
        if t <= 0:
            continue
        rhs = t * math.log(K / t)
        lhs = abs(entropy_of_masses(p) - entropy_of_masses(q))
        if lhs > rhs + 1e-12:
            violations += 1
            worst = max(worst, lhs - rhs)
            if len(examples) < 5:
                examples.append({"sample": s, "l1": t, "lhs": lhs, "rhs": rhs})
    if violations:
        logger.warning(
            f"continuity_probe K={K}: {violations}/{samples} pairs exceed t·log(K/t) "
            f"(worst excess {worst:.3g})"
        )
    return ContinuityProbe(samples, violations, worst, examples)
