"""Tour of the exact distance machinery: line DP, brute force, axis splits,
and the blow-up onto a uniform grid.

Run from the repository root after an editable install:

    python3 demos/distance_oracles.py
"""

from fractions import Fraction

from bdpt import (
    BoundingFamily,
    GridFunction,
    HypergridShape,
    ProductDistribution,
    Quasimetric,
    build_violation_graph,
    check_dimension_reduction,
    exact_distance_bruteforce,
    exact_distance_line,
    rationalize,
    verify_bloat_equivalence,
)


def banner(text):
    print()
    print(f"== {text} ==")


def main():
    banner("line distance by dynamic programming")
    shape = HypergridShape((4,))
    f = GridFunction(shape, tuple(Fraction(v) for v in (1, 3, 2, 4)))
    q = Quasimetric(BoundingFamily.monotone(shape))
    mu = (Fraction(1, 4),) * 4
    report = exact_distance_line(f, q, mu)
    print("values:", [str(v) for v in f.values])
    print("distance to the family:", report.dist)
    print("cheapest set of points to change:", sorted(report.optimal_fix_set))
    print("one repaired function:", [str(v) for v in report.witness_function.values])

    banner("the violation graph behind that number")
    vg = build_violation_graph(f, q, weighted=True)
    for (x, y), w in zip(vg.edges, vg.weights):
        print(f"  f{x} - f{y} exceeds the allowed gap (edge weight {w})")

    banner("grids: brute force over independent sets")
    grid = HypergridShape((2, 2))
    xor = GridFunction(grid, (Fraction(0), Fraction(1), Fraction(1), Fraction(0)))
    dist = ProductDistribution.uniform(grid)
    qg = Quasimetric(BoundingFamily.monotone(grid))
    rep = exact_distance_bruteforce(xor, qg, dist)
    print("xor on the square: distance", rep.dist,
          "fix set", sorted(rep.optimal_fix_set))

    banner("axis split: per-direction distances bracket the global one")
    dr = check_dimension_reduction(xor, qg, dist)
    print("global:", dr.dist, "| per-axis:", [str(v) for v in dr.per_axis])
    print("axis sum:", dr.axis_sum,
          "| lower bound holds:", dr.lower_ok, "| upper bound holds:", dr.upper_ok)

    banner("blow-up: replicate columns so an arbitrary product law turns uniform")
    line = HypergridShape((2,))
    g = GridFunction(line, (Fraction(5), Fraction(1)))
    skew = ProductDistribution.from_marginals([[Fraction(1, 3), Fraction(2, 3)]])
    bloat = rationalize(skew, cap=22)
    print("replication counts per value:", bloat.weights)
    eq = verify_bloat_equivalence(g, Quasimetric(BoundingFamily.monotone(line)), skew)
    print("distance under the skewed law:", eq.dist_source)
    print("distance of the blown-up function under uniform:", eq.dist_bloated)
    print("equal:", eq.equal, "| every line agrees too:", eq.per_line_ok)


if __name__ == "__main__":
    main()
