"""Experiment generators, metrics, and the naive-LP baseline comparison.

Two synthetic studies stress the robust solver: low-affinity "dummy"
reviewers whose estimated scores are noisy enough to fool a naive solver,
and "noisy papers" whose mid-ranked reviewers are systematically
overestimated. A keyword-profile model builds a Gaussian ellipsoid
(truncated to the unit hypercube) from paper/reviewer keyword overlap.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .adversary import adversary
from .core import AffinityMatrix, AssignmentConstraints, usw, _frozen_array
from .flowassign import solve_known
from .rounding import RoundingConfig, round_assignment
from .rra import RRAConfig, budgeted_config, rra_solve
from .uncertainty import UncertaintySet, build_gaussian_ellipsoid, contains

DEFAULT_DEMAND = 3
DEFAULT_CAP = 6
DEFAULT_DELTA = 0.05


def default_constraints(
    n: int, m: int, demand: int = DEFAULT_DEMAND, cap: int = DEFAULT_CAP
) -> AssignmentConstraints:
    """Every paper requires `demand` reviews, every reviewer handles at most
    `cap` papers, no conflicts."""
    return AssignmentConstraints(
        np.full(n, demand, dtype=np.int64), np.full(m, cap, dtype=np.int64)
    )


# ---------------------------------------------------------------------------
# keyword model


@dataclass(frozen=True)
class KeywordProfile:
    """Binary keyword indicators per paper and keyword counts per reviewer,
    over a shared vocabulary."""

    paper_keywords: np.ndarray
    reviewer_counts: np.ndarray
    vocab: tuple = ()

    def __post_init__(self):
        pk = _frozen_array(self.paper_keywords, dtype=np.int64)
        rc = _frozen_array(self.reviewer_counts, dtype=np.int64)
        if pk.shape[1] != rc.shape[1]:
            raise ValueError("papers and reviewers must share a vocabulary")
        if pk.min(initial=0) < 0 or pk.max(initial=0) > 1:
            raise ValueError("paper keywords must be 0/1 indicators")
        if rc.min(initial=0) < 0:
            raise ValueError("reviewer keyword counts must be non-negative")
        object.__setattr__(self, "paper_keywords", pk)
        object.__setattr__(self, "reviewer_counts", rc)
        if self.vocab:
            if len(self.vocab) != pk.shape[1]:
                raise ValueError("vocab length must match keyword columns")
            object.__setattr__(self, "vocab", tuple(self.vocab))

    @property
    def n(self) -> int:
        return self.paper_keywords.shape[0]

    @property
    def m(self) -> int:
        return self.reviewer_counts.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.paper_keywords.shape[1]


def rescale_counts(counts: np.ndarray) -> np.ndarray:
    """Map non-zero keyword counts order-preservingly onto evenly spaced
    values in [0.2, 1] (min non-zero -> 0.2, max -> 1; equal counts get equal
    values; a single distinct value maps to 1.0). Zeros stay zero."""
    counts = np.asarray(counts)
    out = np.zeros(counts.shape[0], dtype=np.float64)
    nz = counts > 0
    if not nz.any():
        return out
    distinct = np.unique(counts[nz])
    if distinct.shape[0] == 1:
        out[nz] = 1.0
        return out
    levels = np.linspace(0.2, 1.0, distinct.shape[0])
    rank = np.searchsorted(distinct, counts[nz])
    out[nz] = levels[rank]
    return out


def keyword_model(profile: KeywordProfile, delta: float = DEFAULT_DELTA):
    """Mean scores from geometrically-discounted sorted keyword overlap, a
    diagonal variance (M_p * M_r)^-2 per pair, and the corresponding
    truncated Gaussian ellipsoid at confidence 1 - delta.

    Returns (mu: AffinityMatrix, sigma_diag: ndarray, set: UncertaintySet).
    """
    if profile.vocab_size == 0:
        raise ValueError("empty vocabulary")
    n, m, v = profile.n, profile.m, profile.vocab_size
    pk = profile.paper_keywords.astype(np.float64)
    rescaled = np.stack(
        [rescale_counts(profile.reviewer_counts[r]) for r in range(m)]
    )
    m_p = (profile.paper_keywords > 0).sum(axis=1)
    m_r = (profile.reviewer_counts > 0).sum(axis=1)
    weights = 0.5 ** np.arange(v)
    z = 2.0 * (1.0 - 0.5 ** m_p.astype(np.float64))  # sum of weights 1..M_p
    mu = np.zeros((n, m))
    for p in range(n):
        if m_p[p] == 0:
            continue
        overlap = pk[p][None, :] * rescaled  # (m, V)
        overlap_sorted = -np.sort(-overlap, axis=1)
        mu[p] = overlap_sorted @ weights / z[p]
    pair_counts = m_p[:, None].astype(np.float64) * m_r[None, :]
    with np.errstate(divide="ignore"):
        sigma = np.where(pair_counts > 0, pair_counts**-2.0, 0.0)
    sigma = np.maximum(sigma, 1e-12)
    uset = build_gaussian_ellipsoid(mu, sigma, delta, truncate=True)
    return AffinityMatrix(mu, unit_box=True), sigma, uset


def synthetic_profile(
    n: int, m: int, vocab_size: int = 60, seed: int = 0
) -> KeywordProfile:
    """Random keyword profile for demos and tests: papers carry 1-4 keywords,
    reviewers accumulate counts over a handful of (popularity-skewed) topics."""
    rng = np.random.default_rng(seed)
    popularity = rng.dirichlet(np.full(vocab_size, 0.4))
    pk = np.zeros((n, vocab_size), dtype=np.int64)
    for p in range(n):
        k = rng.integers(1, 5)
        idx = rng.choice(vocab_size, size=k, replace=False, p=popularity)
        pk[p, idx] = 1
    rc = np.zeros((m, vocab_size), dtype=np.int64)
    for r in range(m):
        k = rng.integers(1, 7)
        idx = rng.choice(vocab_size, size=k, replace=False, p=popularity)
        rc[r, idx] = rng.integers(1, 6, size=k)
    return KeywordProfile(pk, rc)


# ---------------------------------------------------------------------------
# synthetic ground-truth studies


@dataclass(frozen=True)
class SyntheticTruth:
    """A known truth matrix alongside the estimate handed to the solvers and
    the per-entry noise standard deviations the organizers assume."""

    s_true: AffinityMatrix
    s_est: AffinityMatrix
    noise_sd: np.ndarray

    def __post_init__(self):
        sd = _frozen_array(self.noise_sd)
        if sd.shape != self.s_true.values.shape or sd.shape != self.s_est.values.shape:
            raise ValueError("truth, estimate and noise must share a shape")
        if sd.min() < 0:
            raise ValueError("noise standard deviations must be non-negative")
        object.__setattr__(self, "noise_sd", sd)


def default_base_truth(n: int, m: int, seed: int = 0) -> AffinityMatrix:
    """Seeded stand-in for a real affinity matrix: per-paper quality offsets
    plus entry-level variation, clipped to [0, 1]."""
    rng = np.random.default_rng(seed)
    quality = rng.uniform(0.1, 0.45, size=(n, 1))
    noise = rng.uniform(-0.15, 0.35, size=(n, m))
    return AffinityMatrix(np.clip(quality + noise, 0.0, 1.0), unit_box=True)


def gen_dummy_experiment(
    base: AffinityMatrix,
    n_dummies: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
    real_sd: float = 0.02,
    dummy_sd: float = 0.15,
    dummy_true: float = 0.1,
):
    """Append low-affinity, high-noise dummy reviewers.

    Real reviewers keep their true scores, estimated with N(0, real_sd) noise;
    each dummy has true affinity `dummy_true` for every paper and an estimate
    drawn from N(dummy_true, dummy_sd). Both noise scales are known to the
    organizers, so the uncertainty set is the truncated Gaussian ellipsoid at
    level 1 - delta with those per-entry variances.

    Returns (SyntheticTruth, UncertaintySet).
    """
    rng = np.random.default_rng(seed)
    n, m = base.n, base.m
    true_real = base.values
    est_real = np.clip(
        true_real + rng.normal(0.0, real_sd, size=(n, m)), 0.0, 1.0
    )
    true_dummy = np.full((n, n_dummies), dummy_true)
    est_dummy = np.clip(
        rng.normal(dummy_true, dummy_sd, size=(n, n_dummies)), 0.0, 1.0
    )
    s_true = np.hstack([true_real, true_dummy])
    s_est = np.hstack([est_real, est_dummy])
    sd = np.hstack(
        [np.full((n, m), real_sd), np.full((n, n_dummies), dummy_sd)]
    )
    uset = build_gaussian_ellipsoid(s_est, sd**2, delta, truncate=True)
    truth = SyntheticTruth(
        AffinityMatrix(s_true, unit_box=True),
        AffinityMatrix(s_est, unit_box=True),
        sd,
    )
    return truth, uset


def gen_noisy_papers(
    base: AffinityMatrix,
    n_noisy: int,
    seed: int,
    delta: float = DEFAULT_DELTA,
    base_sd: float = 0.02,
    noisy_sd: float = 0.15,
    boost: float = 0.3,
    rank_window: tuple = (20, 30),
):
    """Systematically overestimate mid-ranked reviewers for a paper subset.

    For each affected paper, the reviewers ranked [20, 30) by true affinity
    get `boost` added to their estimate (clipped), and the organizers model
    those pairs with standard deviation `noisy_sd` instead of `base_sd`.

    Returns (SyntheticTruth, UncertaintySet).
    """
    n, m = base.n, base.m
    lo_rank, hi_rank = rank_window
    if m < hi_rank:
        raise ValueError(f"need at least {hi_rank} reviewers, got {m}")
    rng = np.random.default_rng(seed)
    true_vals = base.values
    est = np.clip(true_vals + rng.normal(0.0, base_sd, size=(n, m)), 0.0, 1.0)
    sd = np.full((n, m), base_sd)
    papers = np.sort(rng.choice(n, size=n_noisy, replace=False))
    for p in papers:
        order = np.argsort(-true_vals[p], kind="stable")
        sel = order[lo_rank:hi_rank]
        est[p, sel] = np.clip(est[p, sel] + boost, 0.0, 1.0)
        sd[p, sel] = noisy_sd
    uset = build_gaussian_ellipsoid(est, sd**2, delta, truncate=True)
    truth = SyntheticTruth(
        base, AffinityMatrix(est, unit_box=True), sd
    )
    return truth, uset


def subsample_venue(obj, paper_frac: float, reviewer_frac: float, seed: int):
    """Seeded without-replacement subsample of papers (rows) and reviewers
    (columns); floor(frac * count) of each, indices kept sorted."""
    if not (0.0 < paper_frac <= 1.0 and 0.0 < reviewer_frac <= 1.0):
        raise ValueError("fractions must lie in (0, 1]")
    rng = np.random.default_rng(seed)

    def pick(total, frac):
        count = int(np.floor(frac * total))
        if count < 1:
            raise ValueError("subsample would be empty")
        return np.sort(rng.choice(total, size=count, replace=False))

    if isinstance(obj, KeywordProfile):
        rows = pick(obj.n, paper_frac)
        cols = pick(obj.m, reviewer_frac)
        return KeywordProfile(
            obj.paper_keywords[rows], obj.reviewer_counts[cols], obj.vocab
        )
    if isinstance(obj, SyntheticTruth):
        rows = pick(obj.s_true.n, paper_frac)
        cols = pick(obj.s_true.m, reviewer_frac)
        return SyntheticTruth(
            AffinityMatrix(obj.s_true.values[np.ix_(rows, cols)]),
            AffinityMatrix(obj.s_est.values[np.ix_(rows, cols)]),
            obj.noise_sd[np.ix_(rows, cols)],
        )
    if isinstance(obj, AffinityMatrix):
        rows = pick(obj.n, paper_frac)
        cols = pick(obj.m, reviewer_frac)
        return AffinityMatrix(obj.values[np.ix_(rows, cols)], obj.unit_box)
    raise TypeError(f"cannot subsample {type(obj)}")


# ---------------------------------------------------------------------------
# method comparison


@dataclass(frozen=True)
class MethodMetrics:
    adversarial_usw: float
    average_usw: float
    true_usw: float | None = None
    true_pct: float | None = None
    runtime_ms: float = 0.0

    def to_dict(self, include_timings=False):
        out = {
            "adversarial_usw": self.adversarial_usw,
            "average_usw": self.average_usw,
        }
        if self.true_usw is not None:
            out["true_usw"] = self.true_usw
            out["true_pct"] = self.true_pct
        if include_timings:
            out["runtime_ms"] = self.runtime_ms
        return out


@dataclass(frozen=True)
class ExperimentReport:
    methods: dict
    instance: dict
    seed: int

    def to_dict(self, include_timings=False):
        return {
            "seed": self.seed,
            "instance": dict(self.instance),
            "methods": {
                name: mm.to_dict(include_timings)
                for name, mm in sorted(self.methods.items())
            },
        }


def run_comparison(
    uset: UncertaintySet,
    c: AssignmentConstraints,
    truth: SyntheticTruth | None = None,
    methods=("naive_lp", "rra"),
    rra_cfg: RRAConfig | None = None,
    seed: int = 0,
) -> ExperimentReport:
    """Compare the naive exact solver at the mean scores against the robust
    solver (ascent + rounding) on one instance.

    Adversarial welfare is evaluated on each method's integral assignment;
    average welfare is the welfare at the set's center; true welfare (and the
    percentage of the known-truth optimum) when a SyntheticTruth is given.
    """
    from .rra import initial_scores

    center = AffinityMatrix(initial_scores(uset))
    opt_true = None
    if truth is not None:
        opt_true = usw(solve_known(truth.s_true, c), truth.s_true)
    results = {}
    for name in methods:
        t0 = time.perf_counter()
        if name == "naive_lp":
            a = solve_known(center, c)
        elif name == "rra":
            cfg = rra_cfg if rra_cfg is not None else RRAConfig()
            res = rra_solve(uset, c, cfg)
            a = round_assignment(res.best_fractional, c, RoundingConfig(seed))
        else:
            raise ValueError(f"unknown method {name!r}")
        dt_ms = (time.perf_counter() - t0) * 1e3
        adv = adversary(a, uset).worst_usw
        avg = usw(a, center)
        true_usw = true_pct = None
        if truth is not None:
            true_usw = usw(a, truth.s_true)
            true_pct = 100.0 * true_usw / opt_true if opt_true else 0.0
        if contains(uset, center.values) and adv > avg + uset.gamma / c.n + 1e-7:
            raise AssertionError(
                f"{name}: adversarial welfare {adv} exceeds center welfare {avg}"
            )
        results[name] = MethodMetrics(adv, avg, true_usw, true_pct, dt_ms)
    inst = {"n": c.n, "m": c.m, "total_demand": c.total_demand}
    return ExperimentReport(results, inst, seed)


# ---------------------------------------------------------------------------
# repetition sweeps (parallel across repetitions; seed = base_seed + index)


def _dummy_rep(args):
    (base_vals, dummies, rep_seed, delta, rra_iters) = args
    base = AffinityMatrix(base_vals, unit_box=True)
    truth, uset = gen_dummy_experiment(base, dummies, rep_seed, delta)
    c = default_constraints(base.n, base.m + dummies)
    cfg = budgeted_config(uset, c, rra_iters)
    rep = run_comparison(uset, c, truth, rra_cfg=cfg, seed=rep_seed)
    return rep.to_dict(include_timings=True)


def _noisy_rep(args):
    (base_vals, noisy, rep_seed, delta, rra_iters) = args
    base = AffinityMatrix(base_vals, unit_box=True)
    truth, uset = gen_noisy_papers(base, noisy, rep_seed, delta)
    c = default_constraints(base.n, base.m)
    cfg = budgeted_config(uset, c, rra_iters)
    rep = run_comparison(uset, c, truth, rra_cfg=cfg, seed=rep_seed)
    return rep.to_dict(include_timings=True)


def _keyword_rep(args):
    (pk, rc, frac, rep_seed, delta, rra_iters) = args
    profile = KeywordProfile(pk, rc)
    sub = subsample_venue(profile, frac, frac, rep_seed)
    _, _, uset = keyword_model(sub, delta)
    c = default_constraints(sub.n, sub.m)
    cfg = budgeted_config(uset, c, rra_iters)
    rep = run_comparison(uset, c, truth=None, rra_cfg=cfg, seed=rep_seed)
    return rep.to_dict(include_timings=True)


def _map_reps(fn, arg_list, workers: int):
    if workers <= 1:
        return [fn(a) for a in arg_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, arg_list))


def _stats(values):
    arr = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def _aggregate(rep_dicts, keys=("adversarial_usw", "average_usw", "true_usw", "true_pct")):
    methods = sorted(rep_dicts[0]["methods"].keys())
    agg = {}
    for name in methods:
        agg[name] = {}
        for key in keys:
            if key in rep_dicts[0]["methods"][name]:
                agg[name][key] = _stats(
                    [d["methods"][name][key] for d in rep_dicts]
                )
    wins = {}
    if {"naive_lp", "rra"} <= set(methods):
        adv_gt = sum(
            1
            for d in rep_dicts
            if d["methods"]["rra"]["adversarial_usw"]
            > d["methods"]["naive_lp"]["adversarial_usw"]
        )
        avg_le = sum(
            1
            for d in rep_dicts
            if d["methods"]["rra"]["average_usw"]
            <= d["methods"]["naive_lp"]["average_usw"]
        )
        wins = {
            "rra_adversarial_gt_naive": adv_gt,
            "rra_average_le_naive": avg_le,
        }
    return agg, wins


def dummy_reviewer_study(
    n: int = 30,
    m: int = 45,
    dummy_counts=(0, 20, 40, 60),
    reps: int = 100,
    seed: int = 7,
    delta: float = DEFAULT_DELTA,
    rra_iters: int = 60,
    workers: int = 1,
    base: AffinityMatrix | None = None,
) -> dict:
    """True-welfare degradation study with an increasing dummy-reviewer pool."""
    if base is None:
        base = default_base_truth(n, m, seed)
    settings = []
    for d in dummy_counts:
        args = [
            (base.values, int(d), seed + i, delta, rra_iters)
            for i in range(reps)
        ]
        reps_out = _map_reps(_dummy_rep, args, workers)
        agg, wins = _aggregate(reps_out)
        settings.append(
            {"dummies": int(d), "reps": reps, "methods": agg, "wins": wins}
        )
    return {
        "experiment": "dummy-reviewers",
        "seed": seed,
        "instance": {"n": base.n, "m_real": base.m, "delta": delta},
        "constraints": {"demand": DEFAULT_DEMAND, "cap": DEFAULT_CAP},
        "rra_iters": rra_iters,
        "settings": settings,
    }


def noisy_paper_study(
    n: int = 30,
    m: int = 45,
    noisy_counts=(0, 10, 20, 30),
    reps: int = 100,
    seed: int = 7,
    delta: float = DEFAULT_DELTA,
    rra_iters: int = 60,
    workers: int = 1,
    base: AffinityMatrix | None = None,
) -> dict:
    """True-welfare study with systematically overestimated mid-rank pairs."""
    if base is None:
        base = default_base_truth(n, m, seed)
    settings = []
    for d in noisy_counts:
        args = [
            (base.values, int(d), seed + i, delta, rra_iters)
            for i in range(reps)
        ]
        reps_out = _map_reps(_noisy_rep, args, workers)
        agg, wins = _aggregate(reps_out)
        settings.append(
            {"noisy_papers": int(d), "reps": reps, "methods": agg, "wins": wins}
        )
    return {
        "experiment": "noisy-papers",
        "seed": seed,
        "instance": {"n": base.n, "m": base.m, "delta": delta},
        "constraints": {"demand": DEFAULT_DEMAND, "cap": DEFAULT_CAP},
        "rra_iters": rra_iters,
        "settings": settings,
    }


def keyword_study(
    profile: KeywordProfile,
    delta: float = DEFAULT_DELTA,
    subsample: float = 0.6,
    reps: int = 100,
    seed: int = 7,
    rra_iters: int = 60,
    workers: int = 1,
) -> dict:
    """Adversarial/average welfare comparison on subsampled keyword venues."""
    args = [
        (
            profile.paper_keywords,
            profile.reviewer_counts,
            subsample,
            seed + i,
            delta,
            rra_iters,
        )
        for i in range(reps)
    ]
    reps_out = _map_reps(_keyword_rep, args, workers)
    agg, wins = _aggregate(reps_out, keys=("adversarial_usw", "average_usw"))
    return {
        "experiment": "keyword",
        "seed": seed,
        "instance": {
            "n": profile.n,
            "m": profile.m,
            "vocab": profile.vocab_size,
            "subsample": subsample,
            "delta": delta,
        },
        "constraints": {"demand": DEFAULT_DEMAND, "cap": DEFAULT_CAP},
        "rra_iters": rra_iters,
        "settings": [{"reps": reps, "methods": agg, "wins": wins}],
    }


def report_json(report: dict, include_timings: bool = False) -> str:
    """Deterministic JSON rendering (sorted keys; timings are volatile and
    only included on request)."""
    payload = report
    if not include_timings:
        payload = _strip_timings(report)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _strip_timings(obj):
    if isinstance(obj, dict):
        return {
            k: _strip_timings(v) for k, v in obj.items() if k != "runtime_ms"
        }
    if isinstance(obj, list):
        return [_strip_timings(v) for v in obj]
    return obj


def render_table(report: dict) -> str:
    """Human-readable summary; welfare scaled by 100 for readability
    (raw JSON keeps unscaled values)."""
    lines = []
    header = report.get("experiment", "experiment")
    lines.append(f"{header}  (welfare x 100)")
    for setting in report["settings"]:
        tag = ", ".join(
            f"{k}={v}"
            for k, v in setting.items()
            if k not in ("methods", "wins", "reps")
        )
        lines.append(f"- {tag or 'single setting'} ({setting['reps']} reps)")
        for name, metrics in sorted(setting["methods"].items()):
            parts = [f"    {name:<10}"]
            for key in ("adversarial_usw", "average_usw", "true_pct"):
                if key in metrics:
                    scale = 1.0 if key == "true_pct" else 100.0
                    st = metrics[key]
                    unit = "%" if key == "true_pct" else ""
                    parts.append(
                        f"{key.replace('_usw','')}: "
                        f"{st['mean']*scale:7.2f}{unit} +- {st['sd']*scale:5.2f}"
                    )
            lines.append("  ".join(parts))
    return "\n".join(lines) + "\n"
