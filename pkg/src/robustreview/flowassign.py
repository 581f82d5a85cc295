"""Exact assignment for known scores via integer min-cost max-flow, plus the
closed-form reductions for box and sphere uncertainty.

Scores are scaled to integer costs (SCALE = 1e9) so the flow solver works in
exact integer arithmetic; the result is optimal within 1/(n*SCALE) of the
real-valued optimum. Ties break toward the lexicographically smallest
(paper, reviewer) pairs.
"""

from __future__ import annotations

import numpy as np

from .core import (
    AffinityMatrix,
    Assignment,
    AssignmentConstraints,
    check_assignment,
    usw,
    validate_instance,
)
from .kernels import mincost_assign

SCALE = 10**9


def _scores(s) -> np.ndarray:
    return s.values if isinstance(s, AffinityMatrix) else np.asarray(s, float)


def solve_known(s, c: AssignmentConstraints) -> Assignment:
    """Integral assignment maximizing USW(A, s) subject to the constraints."""
    vals = _scores(s)
    if vals.shape != (c.n, c.m):
        raise ValueError(
            f"scores shape {vals.shape} does not match constraints ({c.n}, {c.m})"
        )
    report = validate_instance(vals.shape, c)
    if not report.feasible:
        raise ValueError(f"infeasible instance: {report.reason}")
    scaled = np.rint(vals * SCALE).astype(np.int64)
    x, flow = mincost_assign(scaled, c.demands, c.caps, c.conflict_mask)
    if int(flow) != c.total_demand:  # pragma: no cover - guarded by validate
        raise RuntimeError("flow solver could not meet validated demand")
    a = Assignment(x.astype(np.float64), kind="integral")
    check_assignment(a, c)
    return a


def solve_box(lower, upper, c: AssignmentConstraints):
    """Maximin assignment for a box set: optimize at the lower bounds.

    Returns (assignment, worst_usw). The upper bounds do not influence the
    solution; they are accepted for validation only.
    """
    lo = _scores(lower)
    up = _scores(upper)
    if np.any(lo > up):
        raise ValueError("invalid box: lower exceeds upper")
    a = solve_known(lo, c)
    return a, usw(a, AffinityMatrix(lo))


def solve_sphere(center, radius: float, c: AssignmentConstraints):
    """Maximin assignment for a sphere set: optimize at the center.

    Returns (assignment, worst_usw) with
    worst_usw = USW(A, center) - radius * sqrt(K) / n.
    """
    if not radius > 0:
        raise ValueError("sphere radius must be positive")
    ctr = _scores(center)
    a = solve_known(ctr, c)
    k = c.total_demand
    return a, usw(a, AffinityMatrix(ctr)) - radius * np.sqrt(k) / c.n
