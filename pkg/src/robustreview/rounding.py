"""Marginal-preserving randomized rounding of fractional assignments.

Dependent rounding on the bipartite graph of fractional entries: repeatedly
find a cycle or maximal path, shift alternate edges by +-theta with the
probabilities that keep every entry's expectation, until the matrix is
integral. Row sums are preserved exactly, caps and conflicts are never
violated, and E[output] equals the input entrywise.

Randomness comes from a splitmix64 stream (seeded explicitly, documented
bit-exactly in docs/formats.md) pre-drawn in Python and consumed by the
kernel, so sample streams are reproducible across backends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Assignment,
    AssignmentConstraints,
    assignment_violations,
    check_assignment,
)
from .kernels import dependent_round

_MASK64 = (1 << 64) - 1


def splitmix64_uniforms(seed: int, count: int) -> np.ndarray:
    """First `count` uniforms in [0,1) of the splitmix64 stream for `seed`.

    x_{t+1} = x_t + 0x9E3779B97F4A7C15 (mod 2^64); output z = x_{t+1} mixed by
    z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB;
    z ^= z>>31; uniform = (z >> 11) * 2^-53.
    """
    x = seed & _MASK64
    out = np.empty(count, dtype=np.float64)
    for i in range(count):
        x = (x + 0x9E3779B97F4A7C15) & _MASK64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        z = z ^ (z >> 31)
        out[i] = (z >> 11) * 2.0**-53
    return out


@dataclass(frozen=True)
class RoundingConfig:
    seed: int
    marginal_tol: float = 1e-9


def round_assignment(
    a: Assignment, c: AssignmentConstraints, cfg: RoundingConfig
) -> Assignment:
    """Sample an integral assignment whose expectation is the fractional one."""
    problems = assignment_violations(a, c)
    if problems:
        raise ValueError("fractional input invalid: " + "; ".join(problems))
    x = a.values.copy()
    tol = cfg.marginal_tol
    n_frac = int(np.count_nonzero((x > tol) & (x < 1.0 - tol)))
    uniforms = splitmix64_uniforms(cfg.seed, n_frac)
    draws, status = dependent_round(x, uniforms, tol)
    if status != 0:  # pragma: no cover - stream sized at the fractional count
        raise RuntimeError("rounding exhausted its uniform stream")
    out = Assignment(x, kind="integral")
    check_assignment(out, c)
    return out


def rounding_deviation(a: Assignment) -> float:
    """Expected L1 deviation of expectation-preserving rounding:
    2 * (||A||_1 - ||A||_2^2). Zero exactly when A is already integral."""
    vals = a.values if isinstance(a, Assignment) else np.asarray(a, float)
    return float(2.0 * (np.abs(vals).sum() - (vals**2).sum()))
