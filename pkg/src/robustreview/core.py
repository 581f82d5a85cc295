"""Domain types, instance validation, and the welfare function.

Papers are rows, reviewers are columns; all matrices are dense row-major
float64. Scores nominally live in [0, 1] (set unit_box=True to enforce it).
All types are immutable after construction and all operations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import mincost_assign

FRACTIONAL_TOL = 1e-6


def _frozen_array(values, dtype=np.float64, ndim=2):
    arr = np.ascontiguousarray(values, dtype=dtype)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AffinityMatrix:
    """Dense n x m matrix of paper-reviewer affinity scores."""

    values: np.ndarray
    unit_box: bool = False

    def __post_init__(self):
        arr = _frozen_array(self.values)
        object.__setattr__(self, "values", arr)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("affinity matrix dimensions must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("affinity scores must be finite")
        if self.unit_box and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("unit_box affinity scores must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class AssignmentConstraints:
    """Per-paper review demands, per-reviewer load caps, and conflicts.

    Conflicts are stored as a sorted (paper, reviewer) pair list; the boolean
    mask derived from it is built once here.
    """

    demands: np.ndarray
    caps: np.ndarray
    conflicts: tuple = ()
    conflict_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        demands = _frozen_array(self.demands, dtype=np.int64, ndim=1)
        caps = _frozen_array(self.caps, dtype=np.int64, ndim=1)
        object.__setattr__(self, "demands", demands)
        object.__setattr__(self, "caps", caps)
        if demands.min(initial=0) < 0 or caps.min(initial=0) < 0:
            raise ValueError("demands and caps must be non-negative")
        n, m = demands.shape[0], caps.shape[0]
        pairs = sorted((int(p), int(r)) for p, r in self.conflicts)
        mask = np.zeros((n, m), dtype=bool)
        for p, r in pairs:
            if not (0 <= p < n and 0 <= r < m):
                raise ValueError(f"conflict pair ({p}, {r}) out of range")
            mask[p, r] = True
        mask.setflags(write=False)
        object.__setattr__(self, "conflicts", tuple(pairs))
        object.__setattr__(self, "conflict_mask", mask)

    @property
    def n(self) -> int:
        return self.demands.shape[0]

    @property
    def m(self) -> int:
        return self.caps.shape[0]

    @property
    def total_demand(self) -> int:
        return int(self.demands.sum())


@dataclass(frozen=True)
class Assignment:
    """Fractional (entries in [0,1]) or integral (entries in {0,1}) assignment."""

    values: np.ndarray
    kind: str = "fractional"

    def __post_init__(self):
        if self.kind not in ("fractional", "integral"):
            raise ValueError(f"unknown assignment kind {self.kind!r}")
        arr = _frozen_array(self.values)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def assignment_violations(a: Assignment, c: AssignmentConstraints) -> list:
    """All constraint violations of `a` under `c` (empty list when valid).

    Integral assignments are checked exactly; fractional ones within
    FRACTIONAL_TOL (Dykstra projections converge approximately).
    """
    out = []
    x = a.values
    if x.shape != (c.n, c.m):
        return [f"shape {x.shape} does not match constraints ({c.n}, {c.m})"]
    tol = 0.0 if a.kind == "integral" else FRACTIONAL_TOL
    if x.min() < -tol or x.max() > 1.0 + tol:
        out.append("entries outside [0, 1]")
    if a.kind == "integral":
        if not np.all((x == 0.0) | (x == 1.0)):
            out.append("integral assignment has non 0/1 entries")
    if np.any(x[c.conflict_mask] != 0.0):
        out.append("conflicted entries must be exactly 0")
    row_err = np.abs(x.sum(axis=1) - c.demands)
    if row_err.max(initial=0.0) > tol:
        out.append(f"row sums deviate from demands by {row_err.max():.3g}")
    col_excess = x.sum(axis=0) - c.caps
    if col_excess.max(initial=0.0) > tol:
        out.append(f"column sums exceed caps by {col_excess.max():.3g}")
    return out


def check_assignment(a: Assignment, c: AssignmentConstraints) -> None:
    """Raise ValueError when `a` violates `c`."""
    problems = assignment_violations(a, c)
    if problems:
        raise ValueError("; ".join(problems))


def usw(a: Assignment, s: AffinityMatrix) -> float:
    """Utilitarian social welfare: (1/n) * sum_{p,r} A[p,r] * S[p,r]."""
    if a.values.shape != s.values.shape:
        raise ValueError(
            f"assignment shape {a.values.shape} does not match "
            f"scores {s.values.shape}"
        )
    return float((a.values * s.values).sum() / a.n)


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    reason: str = ""
    achieved_flow: int = 0
    required_flow: int = 0


def validate_instance(dims, c: AssignmentConstraints) -> FeasibilityReport:
    """Max-flow feasibility check of the demand/cap bipartite graph with
    conflicted edges removed; reports the bottleneck when infeasible."""
    n, m = dims
    if (n, m) != (c.n, c.m):
        return FeasibilityReport(False, f"dims {dims} do not match constraints")
    required = c.total_demand
    open_per_paper = (~c.conflict_mask).sum(axis=1)
    for p in range(n):
        if c.demands[p] > 0 and open_per_paper[p] == 0:
            return FeasibilityReport(
                False, f"paper {p} fully conflicted", 0, required
            )
        if c.demands[p] > open_per_paper[p]:
            return FeasibilityReport(
                False,
                f"paper {p} demands {c.demands[p]} but has only "
                f"{open_per_paper[p]} non-conflicted reviewers",
                0,
                required,
            )
    capacity = int(c.caps.sum())
    if required > capacity:
        return FeasibilityReport(
            False, "demand exceeds capacity", 0, required
        )
    zero = np.zeros((n, m), dtype=np.int64)
    x, flow = mincost_assign(zero, c.demands, c.caps, c.conflict_mask)
    flow = int(flow)
    if flow < required:
        short = np.flatnonzero(x.sum(axis=1) < c.demands)
        which = int(short[0]) if short.size else -1
        return FeasibilityReport(
            False,
            f"paper {which} cannot be covered (max flow {flow} < {required})",
            flow,
            required,
        )
    return FeasibilityReport(True, "", flow, required)
