"""Euclidean projection onto the fractional assignment polytope.

The polytope is the intersection of two blocks: per-row capped simplices
(sum equal to the demand, entries in [0,1], conflicts zero) and per-column
capped boxes (sum at most the cap). Dykstra's algorithm with correction
terms converges to the true projection on such intersections, where plain
alternating projection would only find a feasible point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Assignment, AssignmentConstraints, validate_instance
from .kernels import dykstra_project
from .kernels._impl import _project_capped_simplex, _project_capped_sum_le

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERS = 10_000


def project_row(x, k: int, allowed=None) -> np.ndarray:
    """Project a vector onto {y in [0,1] on allowed, 0 elsewhere, sum y = k}.

    Computed by bisection on the shift tau in y = clip(x - tau, 0, 1), to
    1e-12 tolerance on the sum.
    """
    x = np.asarray(x, dtype=np.float64)
    allowed = (
        np.ones(x.shape[0], dtype=bool)
        if allowed is None
        else np.asarray(allowed, dtype=bool)
    )
    if int(allowed.sum()) < k:
        raise ValueError(
            f"infeasible row projection: {int(allowed.sum())} free entries < k={k}"
        )
    out = np.empty_like(x)
    _project_capped_simplex(x, float(k), allowed, out)
    return out


def project_col(x, u: int, allowed=None) -> np.ndarray:
    """Project a vector onto {y in [0,1] on allowed, 0 elsewhere, sum y <= u}."""
    x = np.asarray(x, dtype=np.float64)
    allowed = (
        np.ones(x.shape[0], dtype=bool)
        if allowed is None
        else np.asarray(allowed, dtype=bool)
    )
    out = np.empty_like(x)
    _project_capped_sum_le(x, float(u), allowed, out)
    return out


@dataclass(frozen=True)
class ProjectionState:
    iterate: Assignment
    residual: float
    last_diff: float
    iterations: int
    residual_history: np.ndarray
    converged: bool


def project_polytope(
    a,
    c: AssignmentConstraints,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    return_state: bool = False,
    validate: bool = True,
):
    """L2-project a matrix onto the fractional assignment polytope.

    Stops when successive iterates differ by less than tol in L-infinity and
    the row-sum residual is within tol (caps, box and conflicts are exact
    after the column half-sweep). Non-convergence with residual above 10*tol
    is reported via the state; the iterate is still returned. Callers in a
    loop can skip the per-call feasibility check with validate=False.
    """
    vals = a.values if isinstance(a, Assignment) else np.asarray(a, np.float64)
    if vals.shape != (c.n, c.m):
        raise ValueError(
            f"matrix shape {vals.shape} does not match constraints ({c.n}, {c.m})"
        )
    if validate:
        report = validate_instance(vals.shape, c)
        if not report.feasible:
            raise ValueError(f"infeasible instance: {report.reason}")
    resid_log = np.empty(max_iters, dtype=np.float64)
    x, iters, diff, resid = dykstra_project(
        np.ascontiguousarray(vals),
        c.demands.astype(np.float64),
        c.caps.astype(np.float64),
        c.conflict_mask,
        tol,
        max_iters,
        resid_log,
    )
    iters = int(iters)
    converged = bool(diff < tol and resid <= tol)
    out = Assignment(x, kind="fractional")
    if not return_state:
        return out
    state = ProjectionState(
        iterate=out,
        residual=float(resid),
        last_diff=float(diff),
        iterations=iters,
        residual_history=resid_log[:iters].copy(),
        converged=converged,
    )
    return out, state
