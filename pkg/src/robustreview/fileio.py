"""File formats: CSV matrices, constraints JSON, uncertainty-set JSON, and
keyword-profile JSON. See docs/formats.md for the schemas."""

from __future__ import annotations

import json
import os

import numpy as np

from .core import AffinityMatrix, AssignmentConstraints
from .harness import KeywordProfile
from .uncertainty import (
    Box,
    Ellipsoid,
    Singleton,
    Sphere,
    UncertaintySet,
    VertexPolytope,
    unit_bounds,
)


def read_matrix(path) -> np.ndarray:
    """CSV, one row per paper, comma-separated decimals, no header."""
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return arr


def write_matrix(path, values) -> None:
    values = np.asarray(values, dtype=np.float64)
    np.savetxt(path, values, delimiter=",", fmt="%.17g")


def read_constraints(path) -> AssignmentConstraints:
    """JSON object {"demands": [...], "caps": [...], "conflicts": [[p, r], ...]}."""
    with open(path) as fh:
        data = json.load(fh)
    conflicts = tuple((int(p), int(r)) for p, r in data.get("conflicts", []))
    return AssignmentConstraints(
        np.asarray(data["demands"], dtype=np.int64),
        np.asarray(data["caps"], dtype=np.int64),
        conflicts,
    )


def write_constraints(path, c: AssignmentConstraints) -> None:
    data = {
        "demands": c.demands.tolist(),
        "caps": c.caps.tolist(),
        "conflicts": [list(pair) for pair in c.conflicts],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve(base_dir, path):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def read_uncertainty_set(path) -> UncertaintySet:
    """Uncertainty-set JSON; matrix-valued fields are CSV paths relative to
    the JSON file. Kinds: singleton, box, sphere, ellipsoid, polytope."""
    with open(path) as fh:
        data = json.load(fh)
    base = os.path.dirname(os.path.abspath(path))
    kind = data["kind"]
    delta = float(data.get("delta", 0.0))
    gamma = float(data.get("gamma", 0.0))
    if kind == "singleton":
        geom = Singleton(read_matrix(_resolve(base, data["center"])))
    elif kind == "box":
        geom = Box(
            read_matrix(_resolve(base, data["lower"])),
            read_matrix(_resolve(base, data["upper"])),
        )
    elif kind == "sphere":
        geom = Sphere(
            read_matrix(_resolve(base, data["center"])), float(data["radius"])
        )
    elif kind == "ellipsoid":
        center = read_matrix(_resolve(base, data["center"]))
        diag = read_matrix(_resolve(base, data["diag"]))
        lower = upper = None
        if data.get("truncated", False):
            lower, upper = unit_bounds(center.shape)
        geom = Ellipsoid(center, diag, float(data["radius_sq"]), lower, upper)
    elif kind == "polytope":
        geom = VertexPolytope(
            tuple(read_matrix(_resolve(base, p)) for p in data["vertices"])
        )
    else:
        raise ValueError(f"unknown uncertainty-set kind {kind!r}")
    return UncertaintySet(geom, delta=delta, gamma=gamma)


def write_uncertainty_set(path, uset: UncertaintySet) -> None:
    """Write the set JSON plus sibling CSVs for matrix-valued fields."""
    base = os.path.dirname(os.path.abspath(path))
    stem = os.path.splitext(os.path.basename(path))[0]
    g = uset.geometry

    def side(name, values):
        fname = f"{stem}_{name}.csv"
        write_matrix(os.path.join(base, fname), values)
        return fname

    data = {"delta": uset.delta, "gamma": uset.gamma}
    if isinstance(g, Singleton):
        data.update(kind="singleton", center=side("center", g.center))
    elif isinstance(g, Box):
        data.update(
            kind="box",
            lower=side("lower", g.lower),
            upper=side("upper", g.upper),
        )
    elif isinstance(g, Sphere):
        data.update(
            kind="sphere", center=side("center", g.center), radius=g.radius
        )
    elif isinstance(g, Ellipsoid):
        data.update(
            kind="ellipsoid",
            center=side("center", g.center),
            diag=side("diag", g.diag_weights),
            radius_sq=g.radius_sq,
            truncated=g.truncated,
        )
    elif isinstance(g, VertexPolytope):
        data.update(
            kind="polytope",
            vertices=[
                side(f"vertex{i}", v) for i, v in enumerate(g.vertices)
            ],
        )
    else:  # pragma: no cover
        raise TypeError(f"unsupported geometry {type(g)}")
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_profile(path) -> KeywordProfile:
    """Keyword profile JSON: {"vocab": [...], "papers": [[idx, ...], ...],
    "reviewers": [[[idx, count], ...], ...]}."""
    with open(path) as fh:
        data = json.load(fh)
    vocab = tuple(data["vocab"])
    v = len(vocab)
    papers = data["papers"]
    reviewers = data["reviewers"]
    pk = np.zeros((len(papers), v), dtype=np.int64)
    for p, idxs in enumerate(papers):
        for i in idxs:
            pk[p, int(i)] = 1
    rc = np.zeros((len(reviewers), v), dtype=np.int64)
    for r, pairs in enumerate(reviewers):
        for i, count in pairs:
            rc[r, int(i)] = int(count)
    return KeywordProfile(pk, rc, vocab)


def write_profile(path, profile: KeywordProfile) -> None:
    vocab = list(profile.vocab) or [
        f"kw{i}" for i in range(profile.vocab_size)
    ]
    papers = [
        np.flatnonzero(profile.paper_keywords[p]).tolist()
        for p in range(profile.n)
    ]
    reviewers = []
    for r in range(profile.m):
        idx = np.flatnonzero(profile.reviewer_counts[r])
        reviewers.append(
            [[int(i), int(profile.reviewer_counts[r, i])] for i in idx]
        )
    with open(path, "w") as fh:
        json.dump(
            {"vocab": vocab, "papers": papers, "reviewers": reviewers},
            fh,
            sort_keys=True,
        )
        fh.write("\n")
