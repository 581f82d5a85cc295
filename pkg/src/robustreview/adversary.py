"""Worst-case score oracles: for a fixed assignment A, compute the scores
in the uncertainty set minimizing welfare, per supported geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffinityMatrix, Assignment, usw
from .kernels import ellipsoid_worst_box
from .uncertainty import (
    Box,
    Ellipsoid,
    Singleton,
    UncertaintySet,
    VertexPolytope,
    Sphere,
)


@dataclass(frozen=True)
class AdversaryResult:
    worst_scores: AffinityMatrix
    worst_usw: float
    dual_multiplier: float = 0.0
    iterations: int = 0


def _values(a) -> np.ndarray:
    if isinstance(a, Assignment):
        return a.values
    return np.asarray(a, dtype=np.float64)


def _result(a_vals, scores, dual=0.0, iters=0) -> AdversaryResult:
    w = float((a_vals * scores).sum() / a_vals.shape[0])
    return AdversaryResult(AffinityMatrix(scores), w, dual, iters)


def adversary_box(a, lower, upper) -> AdversaryResult:
    """Worst case over a box: every score at its lower bound."""
    a_vals = _values(a)
    lo = lower.values if isinstance(lower, AffinityMatrix) else np.asarray(lower, float)
    up = upper.values if isinstance(upper, AffinityMatrix) else np.asarray(upper, float)
    if np.any(lo > up):
        raise ValueError("invalid box: lower exceeds upper")
    return _result(a_vals, lo.copy())


def adversary_sphere(a, center, radius: float) -> AdversaryResult:
    """Worst case over a Frobenius ball: center - A * radius / ||A||_F,
    with value USW(A, center) - radius * ||A||_F / n."""
    if not radius > 0:
        raise ValueError("sphere radius must be positive")
    a_vals = _values(a)
    c = center.values if isinstance(center, AffinityMatrix) else np.asarray(center, float)
    norm = float(np.linalg.norm(a_vals))
    if norm == 0.0:
        return _result(a_vals, c.copy())
    return _result(a_vals, c - a_vals * (radius / norm))


def adversary_ellipsoid(
    a, uset: UncertaintySet, tol: float = 1e-9, max_iter: int = 200
) -> AdversaryResult:
    """Worst case over an axis-aligned ellipsoid.

    Untruncated: closed form center - sqrt(R) * (w*a) / sqrt(a.(w*a)).
    Truncated: bisection on the dual multiplier of the quadratic constraint;
    for each multiplier the minimizer clamps elementwise to the box.
    """
    g = uset.geometry
    if not isinstance(g, Ellipsoid):
        raise TypeError("adversary_ellipsoid needs an Ellipsoid geometry")
    a_vals = _values(a)
    if a_vals.min() < 0:
        raise ValueError("assignments must be non-negative")
    c = g.center
    w = g.diag_weights
    if np.all(a_vals == 0.0):
        if g.truncated:
            scores = np.minimum(np.maximum(c, g.lower), g.upper)
        else:
            scores = c.copy()
        return _result(a_vals, scores)
    if not g.truncated:
        quad = float((a_vals * w * a_vals).sum())
        if quad <= 0.0:  # unreachable for w > 0 and a != 0; guarded anyway
            raise ArithmeticError("degenerate direction in ellipsoid adversary")
        step = np.sqrt(g.radius_sq) / np.sqrt(quad)
        return _result(a_vals, c - step * (w * a_vals))
    s_out = np.empty(a_vals.size)
    nu, iters, resid, status = ellipsoid_worst_box(
        np.ascontiguousarray(a_vals.ravel()),
        np.ascontiguousarray(c.ravel()),
        np.ascontiguousarray(w.ravel()),
        g.radius_sq,
        np.ascontiguousarray(g.lower.ravel()),
        np.ascontiguousarray(g.upper.ravel()),
        tol,
        max_iter,
        s_out,
    )
    if status == 2:
        raise ValueError("empty uncertainty set: ellipsoid misses its box")
    if status == 1:
        raise ArithmeticError(
            f"ellipsoid adversary bisection did not converge: residual {resid:.3g}"
        )
    return _result(a_vals, s_out.reshape(a_vals.shape), float(nu), int(iters))


def adversary_vertices(a, vertices) -> AdversaryResult:
    """Worst case over the convex hull of explicit vertices: a linear
    objective attains its minimum at a vertex (ties to the lowest index)."""
    a_vals = _values(a)
    verts = [
        v.values if isinstance(v, AffinityMatrix) else np.asarray(v, float)
        for v in vertices
    ]
    if not verts:
        raise ValueError("need at least one vertex")
    best_idx = 0
    best = float((a_vals * verts[0]).sum())
    for i in range(1, len(verts)):
        val = float((a_vals * verts[i]).sum())
        if val < best:
            best = val
            best_idx = i
    return _result(a_vals, verts[best_idx].copy(), iters=best_idx)


def adversary(a, uset: UncertaintySet) -> AdversaryResult:
    """Dispatch on geometry; applies the conservative correction for sets
    carrying a symbolic L1 pad (the pad's worst case shifts the highest-
    weight assigned entry down by the pad)."""
    g = uset.geometry
    if isinstance(g, Singleton):
        res = _result(_values(a), g.center.copy())
    elif isinstance(g, Box):
        res = adversary_box(a, g.lower, g.upper)
    elif isinstance(g, Sphere):
        res = adversary_sphere(a, g.center, g.radius)
    elif isinstance(g, Ellipsoid):
        res = adversary_ellipsoid(a, uset)
    elif isinstance(g, VertexPolytope):
        res = adversary_vertices(a, g.vertices)
    else:  # pragma: no cover
        raise TypeError(f"unsupported geometry {type(g)}")
    if uset.l1_pad > 0.0:
        a_vals = _values(a)
        flat = a_vals.ravel()
        idx = int(np.argmax(flat))
        if flat[idx] > 0.0:
            scores = res.worst_scores.values.copy()
            scores.ravel()[idx] -= uset.l1_pad
            res = _result(a_vals, scores, res.dual_multiplier, res.iterations)
    return res
