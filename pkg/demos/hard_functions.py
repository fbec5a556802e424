"""Tour of the adversarial constructions used to argue query lower bounds:
level functions on a line, segment functions on a biased hypercube, and the
transfer that turns a monotonicity instance into a bounded-derivative one.

Run from the repository root after an editable install:

    python3 demos/hard_functions.py
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
    build_violation_graph,
    captured_tuples,
    exact_distance_line,
    hypercube_hard_family,
    line_hard_family,
    mono_to_bdp,
    monotone_metric,
    project_to_hypercube,
    stability_report,
)


def banner(text):
    print()
    print(f"== {text} ==")


def main():
    banner("level functions on a uniform line of 8 values")
    mu = (Fraction(1, 8),) * 8
    family = line_hard_family(mu, Fraction(1, 10))
    print("levels:", family.ell_eps)
    q = monotone_metric(HypergridShape((8,)))
    for j in range(1, family.ell_eps + 1):
        level = family.level(j)
        d = exact_distance_line(level.g, q, mu, with_witness=False).dist
        print(f"  level {j}: g = {[str(v) for v in level.g.values]}")
        print(f"           beta = {level.beta}, distance from monotone = {d}"
              f" (>= beta/2: {2 * d >= level.beta})")

    banner("perturbing the law: how robust is the optimal search cost?")
    skewed = [Fraction(1, 2)] + [Fraction(1, 14)] * 7
    rep = stability_report(
        ProductDistribution.from_marginals([skewed]), Fraction(1, 10)
    )
    print("optimal expected depth:", rep.total_delta_star)
    print("after truncating mass below the heavy levels:", rep.total_truncated)
    print("after concentrating all mass on the heaviest value:",
          rep.total_concentrated)
    print("cost ratios vs the original:",
          {k: str(v) for k, v in rep.ratios().items()})

    banner("biased hypercube: one segment function per captured axis bundle")
    theta = (Fraction(1, 4), Fraction(1, 4), Fraction(1, 4))
    cube_family = hypercube_hard_family(theta)
    print("segments of axes:", cube_family.segments,
          "| leftover axes:", cube_family.leftover)
    cube_dist = ProductDistribution.from_marginals([[t, 1 - t] for t in theta])
    print("cube law per axis:", cube_dist.to_json()[0])
    for a in range(1, len(cube_family.segments) + 1):
        print(f"  segment {a}: fiber cover value {cube_family.fiber_cover_value(a)}")

    banner("projecting a wide grid law onto a hypercube")
    wide = ProductDistribution.from_marginals(
        [
            [Fraction(1, 6)] * 6,
            [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 8)],
        ]
    )
    proj = project_to_hypercube(wide)
    print("split thresholds per axis:", proj.thresholds)
    print("induced low-side masses:", [str(t) for t in proj.theta])

    banner("monotone hardness transfers to any bounded-derivative family")
    line = HypergridShape((4,))
    bounds = BoundingFamily.per_axis(
        line, [((Fraction(-1), Fraction(0), Fraction(-2)),
                (Fraction(2), Fraction(1), Fraction(3)))]
    )
    f = GridFunction(line, tuple(Fraction(v) for v in (3, 1, 4, 2)))
    g = mono_to_bdp(f, bounds)
    print("monotone instance:", [str(v) for v in f.values])
    print("transferred instance:", [str(v) for v in g.values])
    same = (
        build_violation_graph(f, monotone_metric(line)).edge_set
        == build_violation_graph(g, Quasimetric(bounds)).edge_set
    )
    print("violation graphs identical:", same)

    banner("q queries pin down at most q - 1 (axis, depth) pairs")
    grid = HypergridShape((5, 5))
    dist = ProductDistribution.uniform(grid)
    trees = [build_median_bst(dist.marginal(r)) for r in (1, 2)]
    rng = Random("demo-capture")
    points = rng.sample(list(grid.points()), 5)
    caught = captured_tuples(points, trees)
    print("query set:", points)
    print("captured (axis, depth) pairs:", sorted(caught),
          f"  ({len(caught)} <= {len(points) - 1})")


if __name__ == "__main__":
    main()
