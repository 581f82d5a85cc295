import numpy as np
import pytest

from robustreview.core import (
    Assignment,
    AssignmentConstraints,
    check_assignment,
    validate_instance,
)
from robustreview.projection import project_col, project_polytope, project_row

from conftest import enumerate_assignments, random_constraints, random_fractional


def exact_projection_2x2_half():
    """Active-set enumeration for projecting [[1,1],[1,1]] onto the 2x2
    polytope with unit demands and caps: by symmetry and KKT the answer is
    the uniform fractional matching."""
    return np.full((2, 2), 0.5)


def test_project_row_examples():
    np.testing.assert_allclose(
        project_row(np.array([0.9, 0.9]), 1), [0.5, 0.5], atol=1e-12
    )
    np.testing.assert_allclose(
        project_row(np.array([1.5, 0.1]), 1), [1.0, 0.0], atol=1e-12
    )
    feasible = np.array([0.25, 0.75])
    np.testing.assert_allclose(project_row(feasible, 1), feasible, atol=1e-12)


def test_project_row_grid_oracle(rng):
    """Dense grid over the feasible segment confirms the KKT solution."""
    x = np.array([1.5, 0.1])
    best = None
    best_d = np.inf
    for t in np.linspace(0.0, 1.0, 20001):
        y = np.array([t, 1.0 - t])
        d = ((y - x) ** 2).sum()
        if d < best_d:
            best_d = d
            best = y
    np.testing.assert_allclose(project_row(x, 1), best, atol=1e-4)


def test_project_row_zero_and_full():
    np.testing.assert_allclose(
        project_row(np.array([0.4, 0.2]), 0), [0.0, 0.0], atol=1e-15
    )
    np.testing.assert_allclose(
        project_row(np.array([0.4, 0.2]), 2), [1.0, 1.0], atol=1e-15
    )
    with pytest.raises(ValueError):
        project_row(np.array([0.4, 0.2]), 3)
    masked = project_row(
        np.array([0.9, 0.8, 0.1]), 1, np.array([True, False, True])
    )
    assert masked[1] == 0.0
    assert masked.sum() == pytest.approx(1.0, abs=1e-10)


def test_project_col_examples():
    np.testing.assert_allclose(
        project_col(np.array([0.2, 0.3]), 2), [0.2, 0.3], atol=1e-15
    )
    np.testing.assert_allclose(
        project_col(np.array([0.9, 0.9]), 1), [0.5, 0.5], atol=1e-12
    )
    np.testing.assert_allclose(
        project_col(np.array([-0.5, 0.4]), 1), [0.0, 0.4], atol=1e-15
    )


def test_project_polytope_examples():
    c = AssignmentConstraints(np.array([1]), np.array([1, 1]))
    out = project_polytope(np.array([[2.0, 2.0]]), c)
    np.testing.assert_allclose(out.values, [[0.5, 0.5]], atol=1e-7)

    c2 = AssignmentConstraints(np.array([1, 1]), np.array([1, 1]))
    out2 = project_polytope(np.ones((2, 2)), c2)
    np.testing.assert_allclose(out2.values, exact_projection_2x2_half(), atol=1e-6)

    # already feasible input is a fixed point
    feasible = np.array([[0.3, 0.7], [0.7, 0.3]])
    out3 = project_polytope(feasible, c2)
    np.testing.assert_allclose(out3.values, feasible, atol=1e-7)


def test_project_polytope_feasibility_and_conflicts(rng):
    done = 0
    while done < 30:
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 6))
        c = random_constraints(rng, n, m)
        if not validate_instance((n, m), c).feasible:
            continue
        done += 1
        out = project_polytope(rng.normal(0.5, 1.0, size=(n, m)), c)
        check_assignment(out, c)
        assert np.all(out.values[c.conflict_mask] == 0.0)


def test_projection_property(rng):
    """||proj(x) - x|| <= ||y - x|| + tol for any feasible y."""
    done = 0
    while done < 100:
        n, m = int(rng.integers(1, 4)), int(rng.integers(2, 6))
        c = random_constraints(rng, n, m)
        if not validate_instance((n, m), c).feasible:
            continue
        done += 1
        x = rng.normal(0.5, 0.8, size=(n, m))
        proj = project_polytope(x, c).values
        d_proj = np.linalg.norm(proj - x)
        for _ in range(100):
            y = random_fractional(rng, c)
            assert d_proj <= np.linalg.norm(y - x) + 1e-4


def test_idempotence(rng):
    done = 0
    while done < 20:
        n, m = int(rng.integers(2, 4)), int(rng.integers(2, 5))
        c = random_constraints(rng, n, m)
        if not validate_instance((n, m), c).feasible:
            continue
        done += 1
        once = project_polytope(rng.normal(0.5, 1.0, size=(n, m)), c).values
        twice = project_polytope(once, c).values
        assert np.abs(twice - once).max() <= 1e-6


def test_projection_state_monotone_residual(rng):
    c = AssignmentConstraints(
        np.array([2, 1, 2]), np.array([2, 2, 2, 1]), ((0, 1),)
    )
    out, state = project_polytope(
        rng.normal(0.5, 1.5, size=(3, 4)), c, return_state=True
    )
    assert state.converged
    hist = state.residual_history
    assert np.all(np.diff(hist) <= 1e-12)
    assert state.residual <= 1e-7


def test_non_convergence_reporting():
    c = AssignmentConstraints(np.array([1, 1]), np.array([1, 1]))
    out, state = project_polytope(
        np.array([[5.0, -3.0], [-4.0, 6.0]]),
        c,
        max_iters=2,
        return_state=True,
    )
    assert not state.converged
    assert state.iterations == 2
    assert out.values.shape == (2, 2)
