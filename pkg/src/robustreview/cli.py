"""Command-line interface.

Subcommands: solve, adversary, round, construct-set, experiment. All inputs
and outputs use the documented file formats (docs/formats.md).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import fileio
from .adversary import adversary
from .core import AffinityMatrix, Assignment, usw, validate_instance
from .flowassign import solve_box, solve_known, solve_sphere
from .harness import (
    dummy_reviewer_study,
    keyword_study,
    noisy_paper_study,
    render_table,
    report_json,
    synthetic_profile,
)
from .rounding import RoundingConfig, round_assignment
from .rra import RRAConfig, rra_solve
from .uncertainty import (
    Box,
    Ellipsoid,
    ProbabilityRatios,
    SampledErrorEstimate,
    Singleton,
    Sphere,
    UncertaintySet,
    VertexPolytope,
    build_gaussian_ellipsoid,
    build_inductive_ellipsoid,
    build_transductive_ellipsoid,
    expand_l1,
    intersect,
)


def _load_set(args) -> UncertaintySet:
    if args.set:
        return fileio.read_uncertainty_set(args.set)
    if args.uncertainty == "singleton" and args.scores:
        return UncertaintySet(
            Singleton(fileio.read_matrix(args.scores)), delta=0.0
        )
    raise SystemExit("need --set SET.json (or --scores for singleton)")


_KIND_OF = {
    Singleton: "singleton",
    Box: "box",
    Sphere: "sphere",
    Ellipsoid: "ellipsoid",
    VertexPolytope: "polytope",
}


def _cmd_solve(args) -> int:
    c = fileio.read_constraints(args.constraints)
    uset = _load_set(args)
    kind = _KIND_OF[type(uset.geometry)]
    if args.uncertainty and args.uncertainty != kind:
        raise SystemExit(
            f"--uncertainty {args.uncertainty} does not match set kind {kind}"
        )
    t0 = time.perf_counter()
    report = {}
    g = uset.geometry
    if kind == "singleton":
        a = solve_known(g.center, c)
        worst = usw(a, AffinityMatrix(g.center))
        center = g.center
    elif kind == "box":
        a, worst = solve_box(g.lower, g.upper, c)
        center = 0.5 * (g.lower + g.upper)
    elif kind == "sphere":
        a, worst = solve_sphere(g.center, g.radius, c)
        center = g.center
    else:
        cfg = RRAConfig(
            epsilon=args.epsilon,
            max_iters_cap=args.max_iters,
            record_trace=bool(args.trace),
        )
        res = rra_solve(uset, c, cfg)
        a = round_assignment(res.best_fractional, c, RoundingConfig(args.seed))
        worst = adversary(a, uset).worst_usw
        center = (
            g.center if not isinstance(g, VertexPolytope) else g.vertices[0]
        )
        report.update(
            iterations=res.iterations_run,
            certified=res.certified,
            fractional_worst_usw=res.best_adversarial_usw,
        )
        if args.trace:
            with open(args.trace, "w") as fh:
                for t, (adv_w, step_norm) in enumerate(res.trace, start=1):
                    fh.write(
                        json.dumps(
                            {"t": t, "adv_usw": adv_w, "step_norm": step_norm}
                        )
                        + "\n"
                    )
    runtime_ms = (time.perf_counter() - t0) * 1e3
    report = {
        "usw": usw(a, AffinityMatrix(center)),
        "worst_usw": worst,
        "runtime_ms": runtime_ms,
        **report,
    }
    fileio.write_matrix(args.out_assignment, a.values)
    with open(args.out_report, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"worst_usw={worst:.6f} usw={report['usw']:.6f} -> {args.out_assignment}")
    return 0


def _cmd_adversary(args) -> int:
    uset = fileio.read_uncertainty_set(args.set)
    a_vals = fileio.read_matrix(args.assignment)
    kind = "integral" if np.all((a_vals == 0) | (a_vals == 1)) else "fractional"
    a = Assignment(a_vals, kind=kind)
    res = adversary(a, uset)
    value_resid = abs(
        res.worst_usw - usw(a, res.worst_scores)
    )
    print(f"worst_usw={res.worst_usw:.9f}")
    print(f"dual_multiplier={res.dual_multiplier:.6g}")
    print(f"iterations={res.iterations}")
    print(f"value_residual={value_resid:.3g}")
    return 0


def _cmd_round(args) -> int:
    c = fileio.read_constraints(args.constraints)
    frac = Assignment(fileio.read_matrix(args.infile), kind="fractional")
    rep = validate_instance(frac.values.shape, c)
    if not rep.feasible:
        raise SystemExit(f"infeasible instance: {rep.reason}")
    for i in range(args.samples):
        out = round_assignment(frac, c, RoundingConfig(args.seed + i))
        path = (
            args.out
            if args.samples == 1
            else args.out.replace(".csv", f"_{i:03d}.csv")
        )
        fileio.write_matrix(path, out.values)
        print(path)
    return 0


def _cmd_construct_set(args) -> int:
    if args.kind == "gaussian":
        mu = fileio.read_matrix(args.center)
        sd = fileio.read_matrix(args.sd)
        uset = build_gaussian_ellipsoid(
            mu,
            sd**2,
            args.delta,
            truncate=not args.no_truncate,
            method=args.method,
        )
    elif args.kind == "inductive":
        uset = build_inductive_ellipsoid(
            fileio.read_matrix(args.center),
            ProbabilityRatios(fileio.read_matrix(args.ratios)),
            SampledErrorEstimate(
                np.loadtxt(args.errors, delimiter=",", ndmin=1), args.delta
            ),
            truncate=not args.no_truncate,
        )
    elif args.kind == "transductive":
        uset = build_transductive_ellipsoid(
            fileio.read_matrix(args.center),
            fileio.read_matrix(args.probs),
            SampledErrorEstimate(
                np.loadtxt(args.errors, delimiter=",", ndmin=1), args.delta
            ),
            truncate=not args.no_truncate,
        )
    elif args.kind == "box":
        uset = UncertaintySet(
            Box(fileio.read_matrix(args.lower), fileio.read_matrix(args.upper)),
            delta=args.delta,
            gamma=args.gamma,
        )
    elif args.kind == "sphere":
        uset = UncertaintySet(
            Sphere(fileio.read_matrix(args.center), args.radius),
            delta=args.delta,
            gamma=args.gamma,
        )
    elif args.kind == "intersect":
        uset = intersect([fileio.read_uncertainty_set(p) for p in args.sets])
    elif args.kind == "expand-l1":
        uset = expand_l1(fileio.read_uncertainty_set(args.sets[0]), args.eta)
    else:  # pragma: no cover
        raise SystemExit(f"unknown construct-set kind {args.kind}")
    fileio.write_uncertainty_set(args.out, uset)
    print(args.out)
    return 0


def _parse_counts(text: str) -> list:
    """Counts like "0,20,60" or ranges "0..60:20" (inclusive ends)."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            span, _, step = part.partition(":")
            a, b = span.split("..")
            step = int(step) if step else max(1, (int(b) - int(a)) // 6)
            out.extend(range(int(a), int(b) + 1, step))
            if out[-1] != int(b):
                out.append(int(b))
        elif part:
            out.append(int(part))
    return out


def _cmd_experiment(args) -> int:
    if args.which == "dummy-reviewers":
        report = dummy_reviewer_study(
            n=args.n,
            m=args.m,
            dummy_counts=_parse_counts(args.dummies),
            reps=args.reps,
            seed=args.seed,
            delta=args.delta,
            rra_iters=args.rra_iters,
            workers=args.workers,
            base=(
                AffinityMatrix(fileio.read_matrix(args.truth), unit_box=True)
                if args.truth
                else None
            ),
        )
    elif args.which == "noisy-papers":
        report = noisy_paper_study(
            n=args.n,
            m=args.m,
            noisy_counts=_parse_counts(args.noisy),
            reps=args.reps,
            seed=args.seed,
            delta=args.delta,
            rra_iters=args.rra_iters,
            workers=args.workers,
            base=(
                AffinityMatrix(fileio.read_matrix(args.truth), unit_box=True)
                if args.truth
                else None
            ),
        )
    else:
        if args.profile:
            profile = fileio.read_profile(args.profile)
        else:
            profile = synthetic_profile(
                args.n, args.m, vocab_size=args.vocab, seed=args.seed
            )
        report = keyword_study(
            profile,
            delta=args.delta,
            subsample=args.subsample,
            reps=args.reps,
            seed=args.seed,
            rra_iters=args.rra_iters,
            workers=args.workers,
        )
    text = report_json(report, include_timings=args.timings)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    sys.stderr.write(render_table(report))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="robustreview",
        description="Robust reviewer assignment under affinity uncertainty",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    p.add_argument("--constraints", required=True)
    p.add_argument("--set", help="uncertainty set JSON")
    p.add_argument("--scores", help="scores CSV (singleton only)")
    p.add_argument(
        "--uncertainty",
        choices=["singleton", "box", "sphere", "ellipsoid", "polytope"],
        help="expected set kind (validated against --set)",
    )
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--max-iters", type=int, default=5000, dest="max_iters")
    p.add_argument("--trace", help="JSONL per-iteration trace (ascent only)")
    p.add_argument("--seed", type=int, default=0, help="rounding seed")
    p.add_argument("--out-assignment", default="assignment.csv")
    p.add_argument("--out-report", default="report.json")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("adversary", help="evaluate worst-case scores")
    p.add_argument("--assignment", required=True)
    p.add_argument("--set", required=True)
    p.set_defaults(func=_cmd_adversary)

    p = sub.add_parser("round", help="sample integral assignments")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--constraints", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--out", default="rounded.csv")
    p.set_defaults(func=_cmd_round)

    p = sub.add_parser("construct-set", help="build an uncertainty set file")
    p.add_argument(
        "kind",
        choices=[
            "gaussian",
            "inductive",
            "transductive",
            "box",
            "sphere",
            "intersect",
            "expand-l1",
        ],
    )
    p.add_argument("--center")
    p.add_argument("--sd", help="per-entry standard deviations CSV (gaussian)")
    p.add_argument("--ratios", help="probability ratios CSV (inductive)")
    p.add_argument("--probs", help="sampling probabilities CSV (transductive)")
    p.add_argument("--errors", help="sampled squared errors CSV, one column")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--radius", type=float)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--method", choices=["exact", "bound"], default="exact")
    p.add_argument("--no-truncate", action="store_true")
    p.add_argument("--sets", nargs="*", default=[])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_construct_set)

    p = sub.add_parser("experiment", help="run a synthetic study")
    which = p.add_subparsers(dest="which", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--reps", type=int, default=100)
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--delta", type=float, default=0.05)
    common.add_argument("--rra-iters", type=int, default=60, dest="rra_iters")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--timings", action="store_true")
    common.add_argument("--out")

    q = which.add_parser("dummy-reviewers", parents=[common])
    q.add_argument("--n", type=int, default=30)
    q.add_argument("--m", type=int, default=45)
    q.add_argument("--dummies", default="0..60:20")
    q.add_argument("--truth", help="base truth CSV instead of the generator")
    q.set_defaults(func=_cmd_experiment)

    q = which.add_parser("noisy-papers", parents=[common])
    q.add_argument("--n", type=int, default=30)
    q.add_argument("--m", type=int, default=45)
    q.add_argument("--noisy", default="0..30:10")
    q.add_argument("--truth", help="base truth CSV instead of the generator")
    q.set_defaults(func=_cmd_experiment)

    q = which.add_parser("keyword", parents=[common])
    q.add_argument("--profile", help="keyword profile JSON")
    q.add_argument("--n", type=int, default=200)
    q.add_argument("--m", type=int, default=300)
    q.add_argument("--vocab", type=int, default=60)
    q.add_argument("--subsample", type=float, default=0.6)
    q.set_defaults(func=_cmd_experiment)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
