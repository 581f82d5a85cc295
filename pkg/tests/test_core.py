import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustreview.core import (
    AffinityMatrix,
    Assignment,
    AssignmentConstraints,
    assignment_violations,
    check_assignment,
    usw,
    validate_instance,
)
from robustreview.flowassign import solve_known
from robustreview.projection import project_polytope
from robustreview.rounding import RoundingConfig, round_assignment

from conftest import random_constraints, random_fractional


def test_usw_examples():
    a = Assignment(np.array([[1.0, 0.0], [0.0, 1.0]]), kind="integral")
    s = AffinityMatrix(np.array([[0.5, 0.2], [0.1, 0.9]]))
    assert usw(a, s) == pytest.approx(0.7, abs=1e-12)

    zero = Assignment(np.zeros((2, 2)), kind="integral")
    assert usw(zero, s) == 0.0

    ones = AffinityMatrix(np.ones((2, 2)))
    assert usw(a, ones) == pytest.approx(1.0, abs=1e-12)


def test_usw_dimension_mismatch():
    a = Assignment(np.ones((2, 2)), kind="integral")
    s = AffinityMatrix(np.ones((2, 3)))
    with pytest.raises(ValueError):
        usw(a, s)


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    alpha=st.floats(-2, 2, allow_nan=False),
    beta=st.floats(-2, 2, allow_nan=False),
)
def test_usw_linearity(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 5), rng.integers(1, 5)
    a = Assignment(rng.random((n, m)))
    s1 = rng.random((n, m))
    s2 = rng.random((n, m))
    lhs = usw(a, AffinityMatrix(alpha * s1 + beta * s2))
    rhs = alpha * usw(a, AffinityMatrix(s1)) + beta * usw(a, AffinityMatrix(s2))
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_usw_bounds(rng):
    for _ in range(50):
        n, m = rng.integers(1, 4), rng.integers(2, 5)
        c = random_constraints(rng, n, m, allow_conflicts=False)
        x = random_fractional(rng, c)
        s = AffinityMatrix(rng.random((n, m)), unit_box=True)
        val = usw(Assignment(x), s)
        assert -1e-12 <= val <= c.total_demand / n + 1e-12


def test_affinity_matrix_invariants():
    with pytest.raises(ValueError):
        AffinityMatrix(np.array([[np.nan, 0.0]]))
    with pytest.raises(ValueError):
        AffinityMatrix(np.array([[1.5, 0.0]]), unit_box=True)
    am = AffinityMatrix(np.array([[1.5, 0.0]]))  # fine without the flag
    assert am.n == 1 and am.m == 2
    with pytest.raises(ValueError):
        am.values[0, 0] = 2.0  # immutable


def test_constraints_invariants():
    with pytest.raises(ValueError):
        AssignmentConstraints(np.array([-1]), np.array([1]))
    c = AssignmentConstraints(np.array([1, 1]), np.array([2, 1]), ((1, 0),))
    assert c.conflict_mask[1, 0] and not c.conflict_mask[0, 0]
    assert c.total_demand == 2


def test_validate_instance_examples():
    c = AssignmentConstraints(np.array([1, 1]), np.array([1, 1]))
    assert validate_instance((2, 2), c).feasible

    c2 = AssignmentConstraints(np.array([2]), np.array([1]))
    rep = validate_instance((1, 1), c2)
    assert not rep.feasible and "demand exceeds capacity" in rep.reason

    c3 = AssignmentConstraints(
        np.array([1]), np.array([1, 1]), ((0, 0), (0, 1))
    )
    rep = validate_instance((1, 2), c3)
    assert not rep.feasible and "paper 0" in rep.reason


def test_validate_instance_flow_bottleneck():
    # both papers demand the only usable reviewer: per-paper checks pass but
    # the flow cannot: caps(1) < demand(2) via conflicts
    c = AssignmentConstraints(
        np.array([1, 1]), np.array([2, 1]), ((0, 1), (1, 1))
    )
    # reviewer 1 conflicted for both papers -> all demand routes to reviewer 0
    rep = validate_instance((2, 2), c)
    assert rep.feasible  # reviewer 0 has cap 2, so this one is fine
    c2 = AssignmentConstraints(
        np.array([1, 1]), np.array([1, 1]), ((0, 1), (1, 1))
    )
    rep2 = validate_instance((2, 2), c2)
    assert not rep2.feasible and rep2.achieved_flow == 1


def test_assignment_kind_checks():
    c = AssignmentConstraints(np.array([1, 1]), np.array([1, 1]))
    good = Assignment(np.eye(2), kind="integral")
    assert assignment_violations(good, c) == []
    frac = Assignment(np.full((2, 2), 0.5))
    assert assignment_violations(frac, c) == []
    bad = Assignment(np.array([[0.5, 0.5], [0.5, 0.5]]), kind="integral")
    assert assignment_violations(bad, c)


def test_validator_fuzz_accepts_solver_outputs_rejects_mutations(rng):
    """Outputs of the exact solver, projection, and rounding all pass; random
    single-entry mutations fail."""
    accepted = 0
    rejected = 0
    cases = 0
    while cases < 1000:
        n, m = int(rng.integers(2, 4)), int(rng.integers(2, 5))
        c = random_constraints(rng, n, m)
        if not validate_instance((n, m), c).feasible:
            continue
        cases += 1
        s = rng.random((n, m))
        a = solve_known(s, c)
        check_assignment(a, c)
        frac = project_polytope(rng.random((n, m)) * 2, c)
        check_assignment(frac, c)
        rounded = round_assignment(frac, c, RoundingConfig(seed=cases))
        check_assignment(rounded, c)
        accepted += 3

        mutated = a.values.copy()
        p = int(rng.integers(0, n))
        r = int(rng.integers(0, m))
        mutated[p, r] = 1.0 - mutated[p, r]
        if assignment_violations(Assignment(mutated, kind="integral"), c):
            rejected += 1
    assert accepted == 3 * cases
    # flipping one entry of an exact assignment always breaks a row sum
    assert rejected == cases
