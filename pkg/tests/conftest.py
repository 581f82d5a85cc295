"""Shared helpers: random instances, brute-force enumeration oracles, and
feasible-point generators."""

from itertools import combinations, product

import numpy as np
import pytest

from robustreview.core import AssignmentConstraints


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def random_constraints(rng, n, m, k_max=2, allow_conflicts=True):
    """Random feasible constraints: demands in [1, k_max], generous-ish caps,
    sparse conflicts that never exhaust a paper's reviewer pool."""
    while True:
        demands = rng.integers(1, k_max + 1, size=n)
        caps = rng.integers(1, max(2, n) + 1, size=m)
        conflicts = []
        if allow_conflicts:
            for p in range(n):
                for r in range(m):
                    if rng.random() < 0.1:
                        conflicts.append((p, r))
        c = AssignmentConstraints(demands, caps, tuple(conflicts))
        open_per_paper = (~c.conflict_mask).sum(axis=1)
        if np.all(open_per_paper >= demands) and caps.sum() >= demands.sum():
            # quick feasibility probe by greedy column-count argument is not
            # sufficient; accept and let exact checks filter at use sites
            return c


def enumerate_assignments(c: AssignmentConstraints):
    """All integral assignments satisfying the constraints (small instances)."""
    n, m = c.n, c.m
    per_row = []
    for p in range(n):
        allowed = [r for r in range(m) if not c.conflict_mask[p, r]]
        per_row.append(list(combinations(allowed, int(c.demands[p]))))
    for choice in product(*per_row):
        x = np.zeros((n, m))
        for p, rows in enumerate(choice):
            for r in rows:
                x[p, r] = 1.0
        if np.all(x.sum(axis=0) <= c.caps):
            yield x


def random_fractional(rng, c: AssignmentConstraints, n_mix=4):
    """Random feasible fractional assignment: a convex combination of
    enumerated integral assignments (exactly feasible by convexity)."""
    pool = list(enumerate_assignments(c))
    if not pool:
        raise ValueError("infeasible constraints for enumeration")
    take = min(n_mix, len(pool))
    idx = rng.choice(len(pool), size=take, replace=False)
    weights = rng.dirichlet(np.ones(take))
    return sum(w * pool[i] for w, i in zip(weights, idx))
