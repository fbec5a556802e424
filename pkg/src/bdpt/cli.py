"""Command-line harness: drive testers, oracles, and reductions from JSON configs.

Subcommands
-----------
``test``      run the randomized tester on the configured function; exit 0 on
              accept, 1 on reject (the report carries the witness pair).
``distance``  exact distance to the family (line DP or brute force).
``dimred``    compare whole-grid distance against per-axis line distances;
              exit 1 if either bound fails.
``bloat``     check distance invariance under the uniform-grid blow-up;
              exit 1 on mismatch.
``hard``      emit the hard-function constructions for the configured
              distribution: per-axis level functions, hypercube family,
              projection, useful maps, and the stability report.
``bench``     sweep distributions, measuring per-step query cost against the
              optimal search depth and entropy; CSV or JSON.
``axioms``    enumerate quasimetric axioms for the configured family; exit 1
              on any failure.

Exit codes: 0 accept/holds, 1 reject/fails, 2 error (malformed config, cap
exceeded, bad flags).  All rationals in reports are ``"p/q"`` strings; the
entropy column of ``bench`` is the one float (it is irrational by nature).
The environment variable ``BDPT_CAP_POINTS`` overrides every brute-force
point cap.  Reports are deterministic for a fixed config and seed, except
for the ``generated_at`` timestamp.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import random
import sys
from fractions import Fraction
from typing import Any, Optional

from .bloat import verify_bloat_equivalence
from .bst import build_median_bst, build_optimal_bst
from .distance import (
    check_dimension_reduction,
    exact_distance_bruteforce,
    exact_distance_line,
)
from .errors import BdptError, DomainError, PreconditionError
from .grid import ProductDistribution
from .hard import (
    build_useful_maps,
    hypercube_hard_family,
    line_hard_family,
    project_to_hypercube,
    stability_report,
)
from .metric import Quasimetric, verify_metric_axioms
from .rational import format_fraction, parse_fraction, sqrt_bounds
from .serialize import (
    DEFAULT_POINT_CAP,
    ExperimentConfig,
    SweepRow,
    canonical_json,
    load_config,
    report_envelope,
)
from .testers import (
    REJECT,
    hypergrid_tester,
    hypergrid_tester_step,
    line_tester,
    line_tester_step,
)

__all__ = ["main"]

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_ERROR = 2

_CI_Z = Fraction(49, 25)  # two-sided 95%, uses the same constant as the testers


def _point_cap(config: ExperimentConfig) -> int:
    env = os.environ.get("BDPT_CAP_POINTS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError as exc:
            raise DomainError(f"BDPT_CAP_POINTS must be an integer, got {env!r}") from exc
        if cap < 1:
            raise DomainError("BDPT_CAP_POINTS must be positive")
        return cap
    return config.cap("points", DEFAULT_POINT_CAP)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_test(config: ExperimentConfig) -> tuple[int, dict]:
    dist = config.resolve_distribution()
    family = config.resolve_family()
    f = config.resolve_function()
    q = Quasimetric(family)
    rng = random.Random(f"cli-test:{config.seed}")
    if config.grid.dimension == 1:
        tree = build_median_bst(dist.marginal(1))
        run = line_tester(tree, f, q, dist.marginal(1), config.epsilon, rng)
        tester = "line"
    else:
        trees = [
            build_median_bst(dist.marginal(r))
            for r in range(1, config.grid.dimension + 1)
        ]
        run = hypergrid_tester(trees, f, q, dist, config.epsilon, rng)
        tester = "hypergrid"
    body = {
        "tester": tester,
        "epsilon": format_fraction(config.epsilon),
        "seed": config.seed,
        "run": run.to_json(),
    }
    return (EXIT_REJECT if run.verdict == REJECT else EXIT_ACCEPT), body


def cmd_distance(config: ExperimentConfig) -> tuple[int, dict]:
    dist = config.resolve_distribution()
    f = config.resolve_function()
    q = Quasimetric(config.resolve_family())
    if config.grid.dimension == 1:
        report = exact_distance_line(f, q, dist.marginal(1))
    else:
        report = exact_distance_bruteforce(f, q, dist, cap=_point_cap(config))
    body = report.to_json()
    body["epsilon"] = format_fraction(config.epsilon)
    body["far"] = bool(report.dist >= config.epsilon)
    return EXIT_ACCEPT, body


def cmd_dimred(config: ExperimentConfig) -> tuple[int, dict]:
    dist = config.resolve_distribution()
    f = config.resolve_function()
    q = Quasimetric(config.resolve_family())
    report = check_dimension_reduction(f, q, dist, cap=_point_cap(config))
    ok = report.lower_ok and report.upper_ok
    return (EXIT_ACCEPT if ok else EXIT_REJECT), report.to_json()


def cmd_bloat(config: ExperimentConfig) -> tuple[int, dict]:
    dist = config.resolve_distribution()
    f = config.resolve_function()
    q = Quasimetric(config.resolve_family())
    report = verify_bloat_equivalence(f, q, dist, cap=_point_cap(config))
    return (EXIT_ACCEPT if report.equal else EXIT_REJECT), report.to_json()


def cmd_hard(config: ExperimentConfig) -> tuple[int, dict]:
    dist = config.resolve_distribution()
    shape = config.grid
    body: dict[str, Any] = {"epsilon": format_fraction(config.epsilon)}

    def guarded(build):
        try:
            return build()
        except PreconditionError as exc:
            return {"skipped": str(exc)}

    body["line_families"] = guarded(
        lambda: [
            line_hard_family(dist.marginal(r), config.epsilon).to_json()
            for r in range(1, shape.dimension + 1)
        ]
    )
    if all(n == 2 for n in shape.side_lengths):
        theta = tuple(
            min(dist.marginal(r)[0], dist.marginal(r)[1])
            for r in range(1, shape.dimension + 1)
        )
        body["hypercube"] = guarded(lambda: hypercube_hard_family(theta).to_json())
    body["projection"] = guarded(lambda: project_to_hypercube(dist).to_json())
    body["useful_maps"] = guarded(
        lambda: [m.to_json() for m in build_useful_maps(dist, config.epsilon)]
    )
    body["stability"] = guarded(lambda: stability_report(dist, config.epsilon).to_json())
    return EXIT_ACCEPT, body


def _mean_and_interval(samples: list[int]) -> tuple[Fraction, Fraction, Fraction]:
    """Exact mean with an outward-rounded normal-approximation interval."""
    k = len(samples)
    mean = Fraction(sum(samples), k)
    var = sum(((Fraction(s) - mean) ** 2 for s in samples), Fraction(0)) / k
    _, se_hi = sqrt_bounds(var / k)
    half = _CI_Z * se_hi
    return mean, max(mean - half, Fraction(0)), mean + half


def cmd_bench(config: ExperimentConfig) -> tuple[int, list[dict]]:
    rows = config.sweep
    if not rows:
        rows = (SweepRow("default", config.shape, config.distribution),)
    out = []
    for row in rows:
        sub = dataclasses.replace(config, shape=row.shape, distribution=row.distribution)
        shape = sub.grid
        dist = sub.resolve_distribution()
        f = sub.resolve_function()
        q = Quasimetric(sub.resolve_family())
        trees = [build_median_bst(dist.marginal(r)) for r in range(1, shape.dimension + 1)]
        delta_star = sum(
            (build_optimal_bst(dist.marginal(r))[1] for r in range(1, shape.dimension + 1)),
            Fraction(0),
        )
        samples = []
        for i in range(config.trials):
            rng = random.Random(f"bench:{row.ident}:{config.seed}:{i}")
            if shape.dimension == 1:
                run = line_tester_step(trees[0], f, q, dist.marginal(1), rng)
            else:
                run = hypergrid_tester_step(trees, f, q, dist, rng)
            samples.append(run.queries_used)
        mean, lo, hi = _mean_and_interval(samples)
        out.append(
            {
                "distribution_id": row.ident,
                "d": shape.dimension,
                "n": max(shape.side_lengths),
                "epsilon": format_fraction(config.epsilon),
                "delta_star": format_fraction(delta_star),
                "entropy": f"{dist.entropy():.6f}",
                "mean_queries": format_fraction(mean),
                "ci_low": format_fraction(lo),
                "ci_high": format_fraction(hi),
                "trials": config.trials,
                "seed": config.seed,
            }
        )
    return EXIT_ACCEPT, out


BENCH_CSV_COLUMNS = (
    "distribution_id",
    "d",
    "n",
    "epsilon",
    "delta_star",
    "entropy",
    "mean_queries",
    "ci_low",
    "ci_high",
    "trials",
    "seed",
)


def _bench_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_CSV_COLUMNS)
    for row in rows:
        writer.writerow([row[col] for col in BENCH_CSV_COLUMNS])
    return buf.getvalue()


def cmd_axioms(config: ExperimentConfig) -> tuple[int, dict]:
    q = Quasimetric(config.resolve_family())
    report = verify_metric_axioms(q, config.grid, cap=_point_cap(config))
    body = {
        "ok": report.ok,
        "identity_failures": [list(x) for x in report.identity_failures[:8]],
        "triangle_failures": [[list(p) for p in t] for t in report.triangle_failures[:8]],
        "linearity_failures": [[list(p) for p in t] for t in report.linearity_failures[:8]],
        "projection_failures": [
            [list(p) for p in t] for t in report.projection_failures[:8]
        ],
    }
    return (EXIT_ACCEPT if report.ok else EXIT_REJECT), body


_HANDLERS = {
    "test": cmd_test,
    "distance": cmd_distance,
    "dimred": cmd_dimred,
    "bloat": cmd_bloat,
    "hard": cmd_hard,
    "bench": cmd_bench,
    "axioms": cmd_axioms,
}


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdpt",
        description="exact-arithmetic property testing on hypergrids",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "test": "run the randomized tester; exit 0 accept / 1 reject",
        "distance": "exact distance to the family",
        "dimred": "check the dimension-reduction inequalities",
        "bloat": "check distance invariance under the uniform blow-up",
        "hard": "emit hard-function constructions for the distribution",
        "bench": "sweep distributions, measuring per-step query cost",
        "axioms": "enumerate quasimetric axioms for the family",
    }
    for name, help_text in helps.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--epsilon", default=None, help="override epsilon, as p/q")
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument(
            "--format",
            choices=("json", "csv"),
            default="json",
            dest="fmt",
            help="report format (csv applies to bench only)",
        )
    return parser


def _apply_overrides(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    updates: dict[str, Any] = {}
    if args.seed is not None:
        if args.seed < 0:
            raise DomainError("field 'seed': expected a non-negative integer")
        updates["seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise DomainError("field 'trials': expected a positive integer")
        updates["trials"] = args.trials
    if args.epsilon is not None:
        try:
            eps = parse_fraction(args.epsilon)
        except ValueError as exc:
            raise DomainError(f"field 'epsilon': {exc}") from exc
        if not 0 < eps < 1:
            raise DomainError("field 'epsilon': must lie strictly between 0 and 1")
        updates["epsilon"] = eps
    return dataclasses.replace(config, **updates) if updates else config


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    config: Optional[ExperimentConfig] = None
    try:
        config = load_config(args.config)
        config = _apply_overrides(config, args)
        code, body = _HANDLERS[args.command](config)
        if args.fmt == "csv":
            if args.command != "bench":
                raise DomainError("csv format is only available for the bench command")
            _emit(_bench_csv(body), args.out)
        else:
            key = "rows" if args.command == "bench" else "result"
            report = report_envelope(args.command, config, {key: body})
            _emit(canonical_json(report), args.out)
        return code
    except BdptError as exc:
        diagnostic = {
            "command": args.command,
            "error": type(exc).__name__,
            "detail": str(exc),
        }
        if config is not None:
            diagnostic["shape"] = list(config.shape)
        sys.stderr.write(canonical_json(diagnostic))
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
