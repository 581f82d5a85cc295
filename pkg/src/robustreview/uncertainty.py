"""Uncertainty-set geometries, statistical constructors, and set calculus.

An UncertaintySet pairs a geometry with (delta, gamma) metadata: with
probability at least 1 - delta the set contains a point within L1 distance
gamma of the true score matrix. Ellipsoids are axis-aligned (diagonal
weights); the quadratic constraint is stored in the normal form

    sum_i (s_i - center_i)^2 / diag_weights_i  <=  radius_sq

with matrices flattened row-major (index p*m + r). The statistical
constructors below divide their averaged quadratic forms through by the
pair count, so radius_sq absorbs any 1/(nm) factor; see docs/formats.md.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import AffinityMatrix, _frozen_array

VARIANCE_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# geometries


@dataclass(frozen=True)
class Singleton:
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen_array(self.center))

    @property
    def shape(self):
        return self.center.shape


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _frozen_array(self.lower)
        upper = _frozen_array(self.upper)
        if lower.shape != upper.shape:
            raise ValueError("box bounds must share a shape")
        if np.any(lower > upper):
            raise ValueError("box lower bounds must not exceed upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def shape(self):
        return self.lower.shape


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen_array(self.center))
        if not self.radius > 0:
            raise ValueError("sphere radius must be positive")

    @property
    def shape(self):
        return self.center.shape


@dataclass(frozen=True)
class Ellipsoid:
    """Axis-aligned ellipsoid, optionally intersected with a box.

    truncated=True in the public constructors means the unit box; intersect()
    may install tighter per-entry bounds.
    """

    center: np.ndarray
    diag_weights: np.ndarray
    radius_sq: float
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        center = _frozen_array(self.center)
        weights = _frozen_array(self.diag_weights)
        if weights.shape != center.shape:
            raise ValueError("diag weights must match the center shape")
        if weights.min() <= 0:
            raise ValueError("diag weights must be strictly positive")
        if not self.radius_sq > 0:
            raise ValueError("radius_sq must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "diag_weights", weights)
        lower, upper = self.lower, self.upper
        if (lower is None) != (upper is None):
            raise ValueError("truncation bounds must come in pairs")
        if lower is not None:
            lower = _frozen_array(lower)
            upper = _frozen_array(upper)
            if lower.shape != center.shape or upper.shape != center.shape:
                raise ValueError("truncation bounds must match the center")
            if np.any(lower > upper):
                raise ValueError("truncation lower bounds exceed upper bounds")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)

    @property
    def truncated(self) -> bool:
        return self.lower is not None

    @property
    def shape(self):
        return self.center.shape


@dataclass(frozen=True)
class VertexPolytope:
    vertices: tuple

    def __post_init__(self):
        if len(self.vertices) < 1:
            raise ValueError("a vertex polytope needs at least one vertex")
        verts = tuple(_frozen_array(v) for v in self.vertices)
        shape = verts[0].shape
        if any(v.shape != shape for v in verts):
            raise ValueError("all vertices must share a shape")
        object.__setattr__(self, "vertices", verts)

    @property
    def shape(self):
        return self.vertices[0].shape


GEOMETRIES = (Singleton, Box, Sphere, Ellipsoid, VertexPolytope)


@dataclass(frozen=True)
class UncertaintySet:
    """Geometry plus (delta, gamma) metadata.

    l1_pad records a Minkowski L1 expansion kept symbolically (expand_l1 on
    non-box geometries); the adversary applies the matching conservative
    correction.
    """

    geometry: object
    delta: float
    gamma: float = 0.0
    l1_pad: float = 0.0

    def __post_init__(self):
        if not isinstance(self.geometry, GEOMETRIES):
            raise TypeError(f"unsupported geometry {type(self.geometry)}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.gamma < 0.0 or self.l1_pad < 0.0:
            raise ValueError("gamma and l1_pad must be non-negative")

    @property
    def shape(self):
        return self.geometry.shape


def _as_values(matrix) -> np.ndarray:
    if isinstance(matrix, AffinityMatrix):
        return matrix.values
    return np.asarray(matrix, dtype=np.float64)


def unit_bounds(shape):
    return np.zeros(shape), np.ones(shape)


# ---------------------------------------------------------------------------
# chi-square inverse CDF


def chi2_inverse(df: int, p: float, tol: float = 1e-10) -> float:
    """Inverse CDF of the chi-square distribution with df degrees of freedom,
    by bisection on the regularized lower incomplete gamma function."""
    if not 0.0 < p < 1.0:
        raise ValueError("probability must lie in (0, 1)")
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    half = 0.5 * df
    lo, hi = 0.0, float(max(df, 1))
    while special.gammainc(half, 0.5 * hi) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if special.gammainc(half, 0.5 * mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi2_upper_bound(df: int, delta: float) -> float:
    """Closed-form upper bound on the 1-delta chi-square quantile:
    df + 2*sqrt(df*ln(1/delta)) + 2*ln(1/delta)."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    log_term = math.log(1.0 / delta)
    return df + 2.0 * math.sqrt(df * log_term) + 2.0 * log_term


# ---------------------------------------------------------------------------
# statistical constructors


def build_gaussian_ellipsoid(
    mu,
    sigma_diag,
    delta: float,
    truncate: bool = True,
    method: str = "exact",
) -> UncertaintySet:
    """Confidence ellipsoid of a diagonal Gaussian model at level 1 - delta.

    The quadratic radius is the chi-square quantile with nm degrees of
    freedom: exact numeric inversion by default, or the conservative
    closed-form bound with method="bound".
    """
    mu = _as_values(mu)
    sigma = np.maximum(_as_values(sigma_diag), VARIANCE_FLOOR)
    if sigma.shape != mu.shape:
        raise ValueError("sigma_diag must match mu's shape")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie strictly in (0, 1)")
    nm = mu.size
    if method == "exact":
        radius_sq = chi2_inverse(nm, 1.0 - delta)
    elif method == "bound":
        radius_sq = chi2_upper_bound(nm, delta)
    else:
        raise ValueError(f"unknown chi-square method {method!r}")
    lower = upper = None
    if truncate:
        lower, upper = unit_bounds(mu.shape)
    geom = Ellipsoid(mu, sigma, radius_sq, lower, upper)
    return UncertaintySet(geom, delta=delta, gamma=0.0)


@dataclass(frozen=True)
class SampledErrorEstimate:
    """Squared errors of an affinity estimator on T sampled pairs."""

    squared_errors: np.ndarray
    delta: float

    def __post_init__(self):
        errs = _frozen_array(self.squared_errors, ndim=1)
        object.__setattr__(self, "squared_errors", errs)
        if errs.shape[0] < 1:
            raise ValueError("need at least one sampled squared error")
        if errs.min() < 0.0 or errs.max() > 1.0:
            raise ValueError("squared errors must lie in [0, 1]")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def pair_count(self) -> int:
        return self.squared_errors.shape[0]

    @property
    def empirical_error(self) -> float:
        return float(self.squared_errors.mean())


@dataclass(frozen=True)
class ProbabilityRatios:
    """Per-pair sampling probability ratios (all strictly positive)."""

    ratios: np.ndarray

    def __post_init__(self):
        ratios = _frozen_array(self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if ratios.min() <= 0.0:
            raise ValueError("probability ratios must be strictly positive")

    @property
    def alpha_min(self) -> float:
        return float(self.ratios.min())

    @property
    def alpha_max(self) -> float:
        return float(self.ratios.max())


def build_inductive_ellipsoid(
    s_hat,
    ratios: ProbabilityRatios,
    est: SampledErrorEstimate,
    truncate: bool = True,
) -> UncertaintySet:
    """Ellipsoid from historic validation data: weights are the probability
    ratios, and the radius combines the empirical squared error with the
    excess-error term sqrt((1/T + (n+m)/(nm*alpha_min^2)) * ln(1/delta)/2)."""
    center = _as_values(s_hat)
    if ratios.ratios.shape != center.shape:
        raise ValueError("ratios must match the estimate's shape")
    n, m = center.shape
    t = est.pair_count
    xi_hat = est.empirical_error
    amin = ratios.alpha_min
    eta = math.sqrt(
        (1.0 / t + (n + m) / (n * m * amin * amin))
        * math.log(1.0 / est.delta)
        / 2.0
    )
    radius_sq = n * m * (xi_hat + eta)
    lower = upper = None
    if truncate:
        lower, upper = unit_bounds(center.shape)
    geom = Ellipsoid(center, ratios.ratios, radius_sq, lower, upper)
    return UncertaintySet(geom, delta=est.delta, gamma=0.0)


def build_transductive_ellipsoid(
    s_hat,
    sample_probs,
    est: SampledErrorEstimate,
    truncate: bool = True,
) -> UncertaintySet:
    """Ellipsoid from in-venue sampled pairs: weights compare uniform
    sampling to the actual sampling distribution, and the excess error is
    sqrt(ln(1/delta) / (2T))."""
    center = _as_values(s_hat)
    probs = _as_values(sample_probs)
    if probs.shape != center.shape:
        raise ValueError("sample_probs must match the estimate's shape")
    if probs.min() <= 0.0:
        raise ValueError("sampling probabilities must be strictly positive")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("sampling probabilities must sum to 1")
    n, m = center.shape
    alpha = (1.0 / (n * m)) / probs
    t = est.pair_count
    eta = math.sqrt(math.log(1.0 / est.delta) / (2.0 * t))
    radius_sq = n * m * (est.empirical_error + eta)
    lower = upper = None
    if truncate:
        lower, upper = unit_bounds(center.shape)
    geom = Ellipsoid(center, alpha, radius_sq, lower, upper)
    return UncertaintySet(geom, delta=est.delta, gamma=0.0)


# ---------------------------------------------------------------------------
# set calculus


def intersect(sets) -> UncertaintySet:
    """Intersection of (delta_i, 0) sets: deltas add, geometries conjoin.

    Supported conjunctions: any number of boxes, at most one quadratic
    (sphere or ellipsoid) whose truncation absorbs all box constraints,
    singletons/polytopes only alone.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("need at least one set to intersect")
    shape = sets[0].shape
    for s in sets:
        if s.shape != shape:
            raise ValueError("all sets must share a shape")
        if s.gamma != 0.0:
            raise ValueError(
                "intersection requires gamma = 0 sets; expand_l1 first"
            )
        if s.l1_pad != 0.0:
            raise ValueError("cannot intersect sets with symbolic L1 padding")
    delta = float(sum(s.delta for s in sets))
    if len(sets) == 1:
        return UncertaintySet(sets[0].geometry, delta=delta, gamma=0.0)

    quads = []
    lower = None
    upper = None
    for s in sets:
        g = s.geometry
        if isinstance(g, Box):
            lo, hi = g.lower, g.upper
        elif isinstance(g, Sphere):
            quads.append(
                Ellipsoid(g.center, np.ones(shape), g.radius**2)
            )
            continue
        elif isinstance(g, Ellipsoid):
            quads.append(g)
            if not g.truncated:
                continue
            lo, hi = g.lower, g.upper
        else:
            raise ValueError(
                f"cannot intersect geometry {type(g).__name__}; only boxes "
                "and at most one sphere/ellipsoid are supported"
            )
        lower = lo if lower is None else np.maximum(lower, lo)
        upper = hi if upper is None else np.minimum(upper, hi)
    if len(quads) > 1:
        raise ValueError(
            "at most one quadratic constraint is supported in an intersection"
        )
    if lower is not None and np.any(lower > upper):
        raise ValueError("intersection is empty: box bounds cross")
    if quads:
        q = quads[0]
        geom = Ellipsoid(q.center, q.diag_weights, q.radius_sq, lower, upper)
    else:
        geom = Box(lower, upper)
    return UncertaintySet(geom, delta=delta, gamma=0.0)


def expand_l1(uset: UncertaintySet, eta: float) -> UncertaintySet:
    """Minkowski-sum the set with the L1 ball of radius eta, trading gamma
    for volume: the result is a (delta, gamma - eta) set.

    Boxes are widened per interval (the enclosing L-infinity ball, a sound
    over-approximation of the L1 ball) and clamped no further than the hull
    of [0,1] and the original box. Other geometries keep eta symbolically;
    the adversary applies the matching conservative correction.
    """
    if eta < 0.0 or eta > uset.gamma + 1e-15:
        raise ValueError("eta must lie in [0, gamma]")
    new_gamma = max(uset.gamma - eta, 0.0)
    if eta == 0.0:
        return UncertaintySet(
            uset.geometry, uset.delta, new_gamma, uset.l1_pad
        )
    g = uset.geometry
    if isinstance(g, Box):
        lo_floor = np.minimum(g.lower, 0.0)
        hi_ceil = np.maximum(g.upper, 1.0)
        lower = np.maximum(g.lower - eta, lo_floor)
        upper = np.minimum(g.upper + eta, hi_ceil)
        return UncertaintySet(
            Box(lower, upper), uset.delta, new_gamma, uset.l1_pad
        )
    return UncertaintySet(g, uset.delta, new_gamma, uset.l1_pad + eta)


def l1_diameter_bound(uset: UncertaintySet) -> float:
    """Upper bound on sup_{S, S' in set} ||S - S'||_1."""
    g = uset.geometry
    nm = int(np.prod(g.shape))
    if isinstance(g, Singleton):
        base = 0.0
    elif isinstance(g, Box):
        base = float((g.upper - g.lower).sum())
    elif isinstance(g, Sphere):
        base = 2.0 * g.radius * math.sqrt(nm)
    elif isinstance(g, Ellipsoid):
        base = 2.0 * math.sqrt(nm * g.radius_sq * float(g.diag_weights.max()))
        if g.truncated:
            base = min(base, float((g.upper - g.lower).sum()))
    elif isinstance(g, VertexPolytope):
        base = 0.0
        verts = g.vertices
        for i in range(len(verts)):
            for j in range(i + 1, len(verts)):
                d = float(np.abs(verts[i] - verts[j]).sum())
                if d > base:
                    base = d
    else:  # pragma: no cover
        raise TypeError(f"unsupported geometry {type(g)}")
    return base + 2.0 * uset.l1_pad


# ---------------------------------------------------------------------------
# membership and sampling (used by the harness and property tests)


def _geometry_residual(g, s: np.ndarray) -> float:
    """How far s is from satisfying the geometry's constraints (0 = inside)."""
    if isinstance(g, Singleton):
        return float(np.abs(s - g.center).max())
    if isinstance(g, Box):
        return float(
            np.maximum(np.maximum(g.lower - s, s - g.upper), 0.0).max()
        )
    if isinstance(g, Sphere):
        return max(0.0, float(np.linalg.norm(s - g.center)) - g.radius)
    if isinstance(g, Ellipsoid):
        q = float((((s - g.center) ** 2) / g.diag_weights).sum())
        resid = max(0.0, q - g.radius_sq)
        if g.truncated:
            box = float(
                np.maximum(np.maximum(g.lower - s, s - g.upper), 0.0).max()
            )
            resid = max(resid, box)
        return resid
    if isinstance(g, VertexPolytope):
        # exact membership needs an LP; used in tests via convex samples only
        raise NotImplementedError(
            "membership testing for vertex polytopes is not supported"
        )
    raise TypeError(f"unsupported geometry {type(g)}")  # pragma: no cover


def contains(uset: UncertaintySet, s, tol: float = 1e-7) -> bool:
    """Whether s is a member (geometry residual at most tol). Sets with
    symbolic L1 padding are only supported for boxes, where the L1 distance
    to the box is exact."""
    s = _as_values(s)
    if uset.l1_pad > 0.0:
        g = uset.geometry
        if isinstance(g, Box):
            gap = np.maximum(np.maximum(g.lower - s, s - g.upper), 0.0)
            return float(gap.sum()) <= uset.l1_pad + tol
        raise NotImplementedError(
            "membership with symbolic L1 padding is box-only"
        )
    return _geometry_residual(uset.geometry, s) <= tol


def sample_members(uset: UncertaintySet, count: int, rng) -> np.ndarray:
    """Draw member matrices, stacked on axis 0. Not uniform; every returned
    point is guaranteed to satisfy the constraints (truncated ellipsoid
    samples are shrunk toward the center until inside the box)."""
    g = uset.geometry
    shape = g.shape
    nm = int(np.prod(shape))
    out = np.empty((count,) + shape)
    if isinstance(g, Singleton):
        out[:] = g.center
    elif isinstance(g, Box):
        u = rng.random((count,) + shape)
        out[:] = g.lower + u * (g.upper - g.lower)
    elif isinstance(g, Sphere):
        z = rng.standard_normal((count, nm))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        radii = g.radius * rng.random(count) ** (1.0 / nm)
        out[:] = g.center + (z * radii[:, None]).reshape((count,) + shape)
    elif isinstance(g, Ellipsoid):
        z = rng.standard_normal((count, nm))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        radii = rng.random(count) ** (1.0 / nm)
        scale = np.sqrt(g.radius_sq * g.diag_weights).reshape(nm)
        pts = g.center.reshape(nm) + z * radii[:, None] * scale
        if g.truncated:
            c = g.center.reshape(nm)
            lo = g.lower.reshape(nm)
            hi = g.upper.reshape(nm)
            c_in = np.minimum(np.maximum(c, lo), hi)
            # shrink toward the clamped center until inside the box
            d = pts - c_in
            with np.errstate(divide="ignore", invalid="ignore"):
                t_hi = np.where(d > 0, (hi - c_in) / d, np.inf)
                t_lo = np.where(d < 0, (lo - c_in) / d, np.inf)
            t = np.minimum(np.minimum(t_hi, t_lo).min(axis=1), 1.0)
            pts = c_in + d * t[:, None]
        out[:] = pts.reshape((count,) + shape)
    elif isinstance(g, VertexPolytope):
        k = len(g.vertices)
        weights = rng.dirichlet(np.ones(k), size=count)
        stack = np.stack(g.vertices)
        out[:] = np.tensordot(weights, stack, axes=(1, 0))
    else:  # pragma: no cover
        raise TypeError(f"unsupported geometry {type(g)}")
    if uset.l1_pad > 0.0:
        # random L1 perturbation within the pad
        e = rng.standard_normal((count, nm))
        e /= np.abs(e).sum(axis=1, keepdims=True)
        e *= (uset.l1_pad * rng.random(count))[:, None]
        out += e.reshape((count,) + shape)
    return out
