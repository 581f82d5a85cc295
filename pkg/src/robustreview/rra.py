"""Robust assignment by supergradient ascent on the worst-case welfare.

The concave objective A -> inf_{S in set} USW(A, S) is maximized over the
fractional assignment polytope: each iteration asks the adversary for the
minimizing scores S, takes the supergradient step A + alpha * S / n, and
projects back onto the polytope. The best iterate seen (by adversarial
welfare) is tracked throughout, so interrupting early still returns a valid
anytime answer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import adversary
from .core import Assignment, AssignmentConstraints, usw, validate_instance
from .flowassign import solve_known
from .projection import project_polytope
from .uncertainty import (
    Box,
    Ellipsoid,
    Singleton,
    Sphere,
    UncertaintySet,
    VertexPolytope,
    l1_diameter_bound,
)


def gradient_bound(uset: UncertaintySet) -> float:
    """Upper bound on ||grad_A USW(A, S)||_2 = ||S||_F / n over the set."""
    g = uset.geometry
    if isinstance(g, Singleton):
        base = float(np.linalg.norm(g.center))
    elif isinstance(g, Box):
        base = float(np.linalg.norm(np.maximum(np.abs(g.lower), np.abs(g.upper))))
    elif isinstance(g, Sphere):
        base = float(np.linalg.norm(g.center)) + g.radius
    elif isinstance(g, Ellipsoid):
        base = float(np.linalg.norm(g.center)) + math.sqrt(
            g.radius_sq * float(g.diag_weights.max())
        )
        if g.truncated:
            cap = float(
                np.linalg.norm(np.maximum(np.abs(g.lower), np.abs(g.upper)))
            )
            base = min(base, cap)
    elif isinstance(g, VertexPolytope):
        base = max(float(np.linalg.norm(v)) for v in g.vertices)
    else:  # pragma: no cover
        raise TypeError(f"unsupported geometry {type(g)}")
    n = g.shape[0]
    return (base + uset.l1_pad) / n


def initial_scores(uset: UncertaintySet) -> np.ndarray:
    """Deterministic starting point: the set's center (vertex 0 for
    polytopes, the midpoint for boxes)."""
    g = uset.geometry
    if isinstance(g, (Singleton, Sphere, Ellipsoid)):
        return np.array(g.center)
    if isinstance(g, Box):
        return 0.5 * (g.lower + g.upper)
    if isinstance(g, VertexPolytope):
        return np.array(g.vertices[0])
    raise TypeError(f"unsupported geometry {type(g)}")  # pragma: no cover


@dataclass(frozen=True)
class RRAConfig:
    """Knobs for the ascent loop.

    epsilon drives the certified step schedule alpha = epsilon / lambda^2 and
    iteration count T = ceil(2K (lambda/epsilon)^2); max_iters_cap truncates T
    (best-iterate tracking keeps truncation safe, but the epsilon guarantee is
    then not certified and the result says so). step_size_override replaces
    alpha. An over-estimated lambda only shrinks steps, never breaks
    correctness.
    """

    epsilon: float = 1e-2
    lambda_bound: float | None = None
    max_iters_cap: int | None = 5000
    step_size_override: float | None = None
    record_trace: bool = False
    projection_tol: float = 1e-7
    projection_max_iters: int = 10_000
    early_stop_patience: int | None = 200
    early_stop_min_gain: float = 1e-9

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.lambda_bound is not None and not self.lambda_bound > 0:
            raise ValueError("lambda bound must be positive when set")


def budgeted_config(
    uset: UncertaintySet,
    c: AssignmentConstraints,
    iters: int,
    **overrides,
) -> RRAConfig:
    """Config tuned to a fixed iteration budget instead of a certified
    epsilon: constant step sqrt(2K) / (lambda * sqrt(T)), the minimizer of
    the subgradient error bound (rho^2 + lambda^2 alpha^2 T) / (2 alpha T)
    at rho = sqrt(2K). The epsilon guarantee is not certified under a budget;
    RRAResult.certified records that."""
    lam = gradient_bound(uset)
    if lam <= 0:
        lam = 1.0
    k_total = c.total_demand
    alpha = math.sqrt(2.0 * k_total) / (lam * math.sqrt(iters))
    kwargs = dict(
        epsilon=1e-9,
        lambda_bound=lam,
        max_iters_cap=iters,
        step_size_override=alpha,
    )
    kwargs.update(overrides)
    return RRAConfig(**kwargs)


@dataclass(frozen=True)
class RRAResult:
    best_fractional: Assignment
    best_adversarial_usw: float
    iterations_run: int
    converged_bound: int
    certified: bool
    trace: list = field(default_factory=list)


def rra_solve(
    uset: UncertaintySet, c: AssignmentConstraints, cfg: RRAConfig = RRAConfig()
) -> RRAResult:
    """Run the ascent loop and return the best iterate.

    Initialization follows the exact solver at the set's center; each
    iteration costs one adversary call and one polytope projection.
    """
    report = validate_instance(uset.shape, c)
    if not report.feasible:
        raise ValueError(f"infeasible instance: {report.reason}")
    n = c.n
    k_total = c.total_demand
    lam = cfg.lambda_bound if cfg.lambda_bound is not None else gradient_bound(uset)
    if lam <= 0:
        lam = 1.0  # all-zero set: any positive step bound works
    t_theory = int(math.ceil(2.0 * k_total * (lam / cfg.epsilon) ** 2))
    t_run = t_theory if cfg.max_iters_cap is None else min(t_theory, cfg.max_iters_cap)
    alpha = (
        cfg.step_size_override
        if cfg.step_size_override is not None
        else cfg.epsilon / (lam * lam)
    )

    s0 = initial_scores(uset)
    a = solve_known(s0, c).values.astype(np.float64)
    best = a.copy()
    best_w = -np.inf
    trace = []
    stale = 0
    iters = 0
    for t in range(1, t_run + 1):
        res = adversary(a, uset)
        w = res.worst_usw
        iters = t
        if w > best_w + cfg.early_stop_min_gain:
            stale = 0
        else:
            stale += 1
        if w > best_w:
            best_w = w
            best = a.copy()
        step = (alpha / n) * res.worst_scores.values
        if cfg.record_trace:
            trace.append((w, float(np.linalg.norm(step))))
        if (
            cfg.early_stop_patience is not None
            and stale >= cfg.early_stop_patience
        ):
            break
        a = project_polytope(
            a + step,
            c,
            tol=cfg.projection_tol,
            max_iters=cfg.projection_max_iters,
            validate=False,
        ).values.copy()
    return RRAResult(
        best_fractional=Assignment(best, kind="fractional"),
        best_adversarial_usw=float(best_w),
        iterations_run=iters,
        converged_bound=t_theory,
        certified=iters >= t_theory,
        trace=trace,
    )


@dataclass(frozen=True)
class SandwichReport:
    true_usw: float
    adversarial_usw: float
    diameter_bound: float
    gamma: float
    lower: float
    upper: float
    holds: bool


def sandwich_check(
    a: Assignment, uset: UncertaintySet, s_true, tol: float = 1e-9
) -> SandwichReport:
    """Two-sided bound relating adversarial to true welfare: when the set
    contains (a point gamma-close to) the truth,
    true - (L + gamma)/n <= adversarial <= true + gamma/n."""
    from .core import AffinityMatrix

    s_true = s_true if isinstance(s_true, AffinityMatrix) else AffinityMatrix(s_true)
    t = usw(a, s_true)
    adv = adversary(a, uset).worst_usw
    diam = l1_diameter_bound(uset)
    n = a.n
    lower = t - (diam + uset.gamma) / n
    upper = t + uset.gamma / n
    holds = (lower - tol) <= adv <= (upper + tol)
    return SandwichReport(t, adv, diam, uset.gamma, lower, upper, holds)
