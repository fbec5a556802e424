"""Walk through a single tester run, from step mechanics to full verdicts.

Run from the repository root after an editable install:

    python3 demos/tester_walkthrough.py
"""

from fractions import Fraction
from random import Random

from bdpt import (
    BoundingFamily,
    GridFunction,
    HypergridShape,
    ProductDistribution,
    Quasimetric,
    build_median_bst,
    estimate_rejection_prob,
    exact_rejection_prob_line,
    expected_line_step_queries,
    hypergrid_tester,
    line_tester,
    line_tester_step,
)


def banner(text):
    print()
    print(f"== {text} ==")


def main():
    banner("a line instance: descending values under the monotone family")
    shape = HypergridShape((5,))
    f = GridFunction(shape, tuple(Fraction(v) for v in (5, 4, 3, 2, 1)))
    q = Quasimetric(BoundingFamily.monotone(shape))
    mu = (Fraction(1, 5),) * 5
    tree = build_median_bst(mu)
    print("function values:", [str(v) for v in f.values])
    print("search tree:")
    print(tree.dump())

    banner("one probe: walk the root path of a random key, compare endpoints")
    step = line_tester_step(tree, f, q, mu, Random("demo-step"))
    print("verdict:", step.verdict, "| queries:", step.queries_used)
    if step.witness:
        print("violating pair:", step.witness)

    banner("the probe's exact behaviour (rational, no sampling)")
    p = exact_rejection_prob_line(tree, f, q, mu)
    c = expected_line_step_queries(tree, mu)
    print("exact per-step rejection probability:", p)
    print("exact per-step expected queries:", c)
    est, (lo, hi) = estimate_rejection_prob(
        lambda rng: line_tester_step(tree, f, q, mu, rng), trials=2000, seed=7
    )
    print(f"Monte-Carlo estimate over 2000 seeded steps: {est} = {float(est):.4f}")
    print(f"95% confidence interval: [{float(lo):.4f}, {float(hi):.4f}]")

    banner("a full run: repeat the probe, reject on the first violation seen")
    eps = Fraction(1, 5)
    run = line_tester(tree, f, q, mu, eps, Random("demo-run"))
    print("epsilon:", eps, "| steps:", run.steps, "| query budget:", run.budget)
    print("verdict:", run.verdict, "after", run.queries_used, "queries")
    print("witness:", run.witness)

    banner("the same machinery on a grid, under a product distribution")
    grid = HypergridShape((3, 3))
    g = GridFunction.from_callable(grid, lambda x: Fraction(6 - x[0] - x[1]))
    qg = Quasimetric(BoundingFamily.monotone(grid))
    dist = ProductDistribution.from_marginals(
        [
            [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)],
            [Fraction(1, 6), Fraction(1, 3), Fraction(1, 2)],
        ]
    )
    trees = [build_median_bst(dist.marginal(r)) for r in (1, 2)]
    grid_run = hypergrid_tester(trees, g, qg, dist, eps, Random("demo-grid"))
    print("verdict:", grid_run.verdict, "| queries:", grid_run.queries_used,
          "of budget", grid_run.budget)
    print("witness:", grid_run.witness)

    banner("a member function is never rejected")
    member = GridFunction.from_callable(grid, lambda x: Fraction(x[0] + x[1]))
    ok = hypergrid_tester(trees, member, qg, dist, eps, Random("demo-member"))
    print("verdict:", ok.verdict, "| queries:", ok.queries_used)


if __name__ == "__main__":
    main()
