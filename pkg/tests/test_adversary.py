import numpy as np
import pytest

from robustreview.adversary import (
    adversary,
    adversary_box,
    adversary_ellipsoid,
    adversary_sphere,
    adversary_vertices,
)
from robustreview.core import AffinityMatrix, Assignment, usw
from robustreview.uncertainty import (
    Box,
    Ellipsoid,
    Singleton,
    Sphere,
    UncertaintySet,
    VertexPolytope,
    expand_l1,
    sample_members,
)


def sphere_minimizer_pgd(a, center, radius, iters=4000, lr=0.05):
    """Independent projected-gradient oracle for the sphere case."""
    n = a.shape[0]
    s = center.copy()
    for _ in range(iters):
        s = s - lr * a / n
        d = s - center
        norm = np.linalg.norm(d)
        if norm > radius:
            s = center + d * (radius / norm)
    return s


def grid_min_1x2(a, mu, w, radius_sq, lo, hi, grid=400):
    """Grid-search oracle over a 1x2 ellipsoid (optionally boxed)."""
    span0 = np.sqrt(radius_sq * w[0])
    span1 = np.sqrt(radius_sq * w[1])
    g0 = np.linspace(max(lo[0], mu[0] - span0), min(hi[0], mu[0] + span0), grid)
    g1 = np.linspace(max(lo[1], mu[1] - span1), min(hi[1], mu[1] + span1), grid)
    s0, s1 = np.meshgrid(g0, g1, indexing="ij")
    quad = (s0 - mu[0]) ** 2 / w[0] + (s1 - mu[1]) ** 2 / w[1]
    obj = a[0] * s0 + a[1] * s1
    obj = np.where(quad <= radius_sq, obj, np.inf)
    return float(obj.min())


def test_adversary_box_examples():
    a = Assignment(np.eye(2), kind="integral")
    lower = np.array([[0.1, 0.2], [0.3, 0.4]])
    res = adversary_box(a, lower, lower + 0.1)
    assert res.worst_usw == pytest.approx(0.25, abs=1e-12)
    np.testing.assert_array_equal(res.worst_scores.values, lower)

    zero = Assignment(np.zeros((2, 2)), kind="integral")
    assert adversary_box(zero, lower, lower + 0.1).worst_usw == 0.0

    degenerate = adversary_box(a, lower, lower)
    assert degenerate.worst_usw == pytest.approx(
        usw(a, AffinityMatrix(lower)), abs=1e-15
    )


def test_adversary_sphere_example_and_pgd_oracle():
    a = Assignment(np.eye(2), kind="integral")
    center = np.array([[0.5, 0.2], [0.1, 0.9]])
    res = adversary_sphere(a, center, 0.1)
    expected = 0.7 - 0.1 * np.sqrt(2) / 2
    assert res.worst_usw == pytest.approx(expected, abs=1e-12)
    # independent oracle: projected gradient on the ball
    s_oracle = sphere_minimizer_pgd(a.values, center, 0.1)
    assert usw(a, AffinityMatrix(s_oracle)) == pytest.approx(
        res.worst_usw, abs=1e-6
    )
    # consistency: value equals usw at the minimizer
    assert res.worst_usw == pytest.approx(
        usw(a, res.worst_scores), abs=1e-12
    )


def test_adversary_sphere_limits():
    a = Assignment(np.eye(2), kind="integral")
    center = np.array([[0.5, 0.2], [0.1, 0.9]])
    small = adversary_sphere(a, center, 1e-12)
    assert small.worst_usw == pytest.approx(0.7, abs=1e-9)
    zero = Assignment(np.zeros((2, 2)), kind="integral")
    res = adversary_sphere(zero, center, 0.5)
    assert res.worst_usw == 0.0
    np.testing.assert_array_equal(res.worst_scores.values, center)


def test_adversary_ellipsoid_closed_form_1x2():
    a = np.array([[1.0, 1.0]])
    mu = np.array([[0.5, 0.5]])
    w = np.array([[1.0, 4.0]])
    uset = UncertaintySet(Ellipsoid(mu, w, 1.0), delta=0.05)
    res = adversary_ellipsoid(a, uset)
    assert res.worst_usw == pytest.approx(1 - np.sqrt(5), abs=1e-12)
    np.testing.assert_allclose(
        res.worst_scores.values,
        [[0.5 - 1 / np.sqrt(5), 0.5 - 4 / np.sqrt(5)]],
        atol=1e-12,
    )
    # 400x400 grid-search cross-check
    grid_val = grid_min_1x2(
        a[0], mu[0], w[0], 1.0, [-np.inf, -np.inf], [np.inf, np.inf]
    )
    assert grid_val == pytest.approx(res.worst_usw, abs=2e-2)
    assert grid_val >= res.worst_usw - 1e-9


def test_adversary_ellipsoid_truncated_1x2_grid():
    a = np.array([[1.0, 1.0]])
    mu = np.array([[0.5, 0.5]])
    w = np.array([[1.0, 4.0]])
    lo = np.zeros((1, 2))
    hi = np.ones((1, 2))
    uset = UncertaintySet(Ellipsoid(mu, w, 1.0, lo, hi), delta=0.05)
    res = adversary_ellipsoid(a, uset)
    grid_val = grid_min_1x2(a[0], mu[0], w[0], 1.0, lo[0], hi[0], grid=2000)
    assert res.worst_usw <= grid_val + 1e-9
    assert res.worst_usw == pytest.approx(grid_val, abs=1e-4)
    # the corner (0, 0) is inside this ellipsoid, so the second coordinate
    # clamps to 0
    assert res.worst_scores.values[0, 1] == 0.0


def test_adversary_ellipsoid_binding_quadratic(rng):
    # smaller radius: quadratic binds, dual multiplier positive
    a = np.array([[1.0, 1.0]])
    mu = np.array([[0.5, 0.5]])
    w = np.array([[1.0, 4.0]])
    uset = UncertaintySet(
        Ellipsoid(mu, w, 0.04, np.zeros((1, 2)), np.ones((1, 2))), delta=0.05
    )
    res = adversary_ellipsoid(a, uset)
    grid_val = grid_min_1x2(a[0], mu[0], w[0], 0.04, [0, 0], [1, 1], grid=2000)
    assert res.worst_usw == pytest.approx(grid_val, abs=1e-4)
    assert res.dual_multiplier > 0
    # constraint residual at the returned point is tiny
    q = float((((res.worst_scores.values - mu) ** 2) / w).sum())
    assert abs(q - 0.04) <= 1e-7


def test_adversary_ellipsoid_isotropic_matches_sphere(rng):
    for _ in range(20):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        center = rng.random((n, m))
        a = (rng.random((n, m)) < 0.5).astype(float)
        radius = float(rng.uniform(0.05, 0.5))
        ell = UncertaintySet(
            Ellipsoid(center, np.ones((n, m)), radius**2), delta=0.05
        )
        r1 = adversary_ellipsoid(a, ell)
        r2 = adversary_sphere(a, center, radius)
        assert r1.worst_usw == pytest.approx(r2.worst_usw, abs=1e-10)


def test_adversary_vertices():
    s = np.array([[0.5, 0.2], [0.1, 0.9]])
    a = Assignment(np.eye(2), kind="integral")
    res = adversary_vertices(a, (s,))
    np.testing.assert_array_equal(res.worst_scores.values, s)

    # per-paper zeroing vertices: worst case is the egalitarian value
    v1 = np.zeros((2, 2))
    v1[0] = s[0]
    v2 = np.zeros((2, 2))
    v2[1] = s[1]
    res2 = adversary_vertices(a, (v1, v2))
    egal = min(s[0, 0], s[1, 1]) / 2
    assert res2.worst_usw == pytest.approx(egal, abs=1e-15)

    # ties resolve to the lowest index
    res3 = adversary_vertices(a, (s, s.copy()))
    assert res3.iterations == 0


def test_adversary_dispatch(rng):
    s = np.array([[0.5, 0.2], [0.1, 0.9]])
    a = Assignment(np.eye(2), kind="integral")
    singleton = UncertaintySet(Singleton(s), delta=0.0)
    assert adversary(a, singleton).worst_usw == pytest.approx(0.7)

    box = UncertaintySet(Box(s - 0.05, s + 0.05), delta=0.0)
    assert adversary(a, box).worst_usw == pytest.approx(0.6, abs=1e-12)

    trunc = UncertaintySet(
        Ellipsoid(s, np.ones((2, 2)), 0.01, np.zeros((2, 2)), np.ones((2, 2))),
        delta=0.05,
    )
    r = adversary(a, trunc)
    assert r.worst_usw <= 0.7


def test_adversary_l1_pad_correction():
    s = np.array([[0.5, 0.2], [0.1, 0.9]])
    a = Assignment(np.eye(2), kind="integral")
    base = UncertaintySet(Singleton(s), delta=0.0, gamma=0.25)
    padded = expand_l1(base, 0.25)
    res = adversary(a, padded)
    # singleton value 0.7 minus pad * max assigned entry / n = 0.25 * 1 / 2
    assert res.worst_usw == pytest.approx(0.7 - 0.125, abs=1e-12)
    # value stays consistent with the returned scores
    assert res.worst_usw == pytest.approx(usw(a, res.worst_scores), abs=1e-12)


def test_soundness_sampling(rng):
    """Adversary value lower-bounds welfare at sampled members (all kinds)."""
    for _ in range(10):
        n, m = int(rng.integers(1, 4)), int(rng.integers(2, 5))
        a = (rng.random((n, m)) < 0.4).astype(float)
        center = rng.random((n, m))
        sets = [
            UncertaintySet(Box(center * 0.5, center * 0.5 + 0.3), 0.05),
            UncertaintySet(Sphere(center, 0.3), 0.05),
            UncertaintySet(
                Ellipsoid(center, rng.random((n, m)) + 0.1, 0.5), 0.05
            ),
            UncertaintySet(
                Ellipsoid(
                    center,
                    rng.random((n, m)) + 0.1,
                    0.5,
                    np.zeros((n, m)),
                    np.ones((n, m)),
                ),
                0.05,
            ),
            UncertaintySet(
                VertexPolytope(tuple(rng.random((n, m)) for _ in range(3))),
                0.05,
            ),
        ]
        for uset in sets:
            worst = adversary(a, uset).worst_usw
            pts = sample_members(uset, 2000, rng)
            vals = (pts * a).sum(axis=(1, 2)) / n
            assert worst <= vals.min() + 1e-9


def test_monotone_in_radius(rng):
    for _ in range(100):
        n, m = int(rng.integers(1, 4)), int(rng.integers(1, 5))
        a = (rng.random((n, m)) < 0.5).astype(float)
        center = rng.random((n, m))
        w = rng.random((n, m)) + 0.05
        prev = np.inf
        for radius_sq in (0.01, 0.1, 0.5, 1.0, 4.0):
            uset = UncertaintySet(
                Ellipsoid(
                    center, w, radius_sq, np.zeros((n, m)), np.ones((n, m))
                ),
                0.05,
            )
            val = adversary(a, uset).worst_usw
            assert val <= prev + 1e-9
            prev = val
