"""Exact distances, certificates, dimension reduction, matching witnesses."""

from fractions import Fraction
from random import Random

import pytest

from bdpt import (
    BoundingFamily,
    DomainError,
    GridFunction,
    HypergridShape,
    PreconditionError,
    ProductDistribution,
    Quasimetric,
    SizeCapError,
    check_dimension_reduction,
    closest_extension,
    directional_distance,
    exact_distance_bruteforce,
    exact_distance_line,
    is_axis_good,
    is_member,
    lipschitz_metric,
    monotone_metric,
    noviol_witness_check,
)
from oracles import (
    line_subset_distance,
    mwmc_has_no_cross,
    random_family,
    random_function,
    random_marginal,
    random_member,
    random_product,
    subset_distance,
)

UNIFORM3 = (Fraction(1, 3),) * 3
UNIFORM4 = (Fraction(1, 4),) * 4


def uniform(shape):
    return ProductDistribution.uniform(shape)


class TestLineDistance:
    def test_reverse_sorted_triple(self):
        f = GridFunction.from_table([3, 2, 1])
        rep = exact_distance_line(f, monotone_metric(f.shape), UNIFORM3)
        assert rep.dist == Fraction(2, 3)
        assert len(rep.optimal_fix_set) == 2

    def test_one_swap(self):
        f = GridFunction.from_table([1, 3, 2, 4])
        rep = exact_distance_line(f, monotone_metric(f.shape), UNIFORM4)
        assert rep.dist == Fraction(1, 4)

    def test_member_distance_zero(self):
        f = GridFunction.from_table([1, 1, 4])
        rep = exact_distance_line(f, monotone_metric(f.shape), UNIFORM3)
        assert rep.dist == 0
        assert rep.optimal_fix_set == frozenset()
        assert rep.witness_function == f

    def test_lipschitz_line(self):
        f = GridFunction.from_table([0, 10, 0, 10, 0])
        rep = exact_distance_line(
            f, lipschitz_metric(f.shape, 1), (Fraction(1, 5),) * 5
        )
        assert rep.dist == Fraction(2, 5)

    def test_skewed_marginal_moves_the_answer(self):
        f = GridFunction.from_table([2, 1])
        q = monotone_metric(f.shape)
        heavy_left = (Fraction(9, 10), Fraction(1, 10))
        assert exact_distance_line(f, q, heavy_left).dist == Fraction(1, 10)

    def test_zero_mass_points_are_free_to_fix(self):
        f = GridFunction.from_table([5, 1, 2])
        q = monotone_metric(f.shape)
        mu = (Fraction(0), Fraction(1, 2), Fraction(1, 2))
        assert exact_distance_line(f, q, mu).dist == 0

    def test_witness_is_member_and_agrees_off_fix_set(self):
        rng = Random(5)
        for _ in range(60):
            n = rng.randint(2, 8)
            shape = HypergridShape((n,))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -3, 3)
            mu = random_marginal(rng, n)
            rep = exact_distance_line(f, q, mu)
            w = rep.witness_function
            assert is_member(w, fam)
            for i in range(1, n + 1):
                if (i,) not in rep.optimal_fix_set:
                    assert w((i,)) == f((i,))
            fixed_mass = sum(
                (mu[i - 1] for i in range(1, n + 1) if (i,) in rep.optimal_fix_set),
                Fraction(0),
            )
            assert fixed_mass == rep.dist

    def test_matches_subset_enumeration(self):
        """DP on consecutive compatibility equals the 2^n oracle."""
        rng = Random(7)
        for _ in range(120):
            n = rng.randint(2, 9)
            shape = HypergridShape((n,))
            fam = random_family(rng, shape, finite_lower=rng.random() < 0.5)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -4, 4)
            mu = random_marginal(rng, n)
            got = exact_distance_line(f, q, mu, with_witness=False).dist
            line = q.line_metric(1)
            want = line_subset_distance(
                [f((i,)) for i in range(1, n + 1)], line.d, mu
            )
            assert got == want

    def test_matches_bruteforce_on_lines(self):
        rng = Random(9)
        for _ in range(60):
            n = rng.randint(2, 12)
            shape = HypergridShape((n,))
            q = monotone_metric(shape)
            f = random_function(rng, shape, 0, 5)
            mu = random_marginal(rng, n)
            dist = ProductDistribution.from_marginals([mu])
            a = exact_distance_line(f, q, mu, with_witness=False).dist
            b = exact_distance_bruteforce(f, q, dist, with_witness=False).dist
            assert a == b

    def test_needs_one_dimension(self):
        f = GridFunction.from_table([[1, 2], [3, 4]])
        with pytest.raises(DomainError):
            exact_distance_line(f, monotone_metric(f.shape), (Fraction(1, 2),) * 2)


class TestGridDistance:
    def test_xor_square(self):
        f = GridFunction.from_table([[0, 1], [1, 0]])
        q = monotone_metric(f.shape)
        rep = exact_distance_bruteforce(f, q, uniform(f.shape))
        assert rep.dist == Fraction(1, 4)
        assert rep.optimal_fix_set == frozenset({(2, 2)})

    def test_witness_contract_on_grids(self):
        rng = Random(11)
        for _ in range(40):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -2, 2)
            dist = random_product(rng, shape)
            rep = exact_distance_bruteforce(f, q, dist)
            w = rep.witness_function
            assert is_member(w, fam)
            kept_mass = Fraction(0)
            for p in shape.points():
                if p not in rep.optimal_fix_set:
                    assert w(p) == f(p)
                    kept_mass += dist.point_mass(p)
            assert kept_mass == 1 - rep.dist

    def test_matches_subset_oracle(self):
        rng = Random(13)
        for _ in range(50):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -2, 2)
            dist = random_product(rng, shape)
            got = exact_distance_bruteforce(f, q, dist, with_witness=False).dist
            assert got == subset_distance(f, q, dist)

    def test_point_cap(self):
        shape = HypergridShape((5, 5))
        f = GridFunction.constant(shape)
        with pytest.raises(SizeCapError):
            exact_distance_bruteforce(
                f, monotone_metric(shape), uniform(shape), cap=22
            )


class TestClosestExtension:
    def test_keeping_everything_returns_f(self):
        f = GridFunction.from_table([1, 2, 2])
        q = monotone_metric(f.shape)
        keep = set(f.shape.points())
        assert closest_extension(f, q, keep) == f

    def test_partial_keep_on_a_line(self):
        f = GridFunction.from_table([3, 2, 1])
        g = closest_extension(f, monotone_metric(f.shape), {(3,)})
        assert [g((i,)) for i in (1, 2, 3)] == [1, 1, 1]

    def test_empty_keep_yields_a_member(self):
        shape = HypergridShape((3,))
        q = monotone_metric(shape)
        g = closest_extension(GridFunction.from_table([9, 9, 9]), q, set())
        assert is_member(g, q.family)
        assert [g((i,)) for i in (1, 2, 3)] == [0, 0, 0]

    def test_empty_keep_integrates_strict_bounds(self):
        # steps forced into [1, 2]: constant functions are not members
        fam = BoundingFamily.per_axis(
            HypergridShape((3,)), [([1, 1], [2, 2])]
        )
        q = Quasimetric(fam)
        g = closest_extension(GridFunction.constant(fam.shape), q, set())
        assert is_member(g, fam)

    def test_violating_keep_set_rejected(self):
        f = GridFunction.from_table([2, 1])
        with pytest.raises(PreconditionError):
            closest_extension(f, monotone_metric(f.shape), {(1,), (2,)})

    def test_random_keeps_extend_to_members(self):
        rng = Random(15)
        for _ in range(40):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_member(rng, fam)
            pts = list(shape.points())
            keep = {p for p in pts if rng.random() < 0.5}
            g = closest_extension(f, q, keep)
            assert is_member(g, fam)
            for p in keep:
                assert g(p) == f(p)


class TestDimensionReduction:
    def test_xor_directionals(self):
        f = GridFunction.from_table([[0, 1], [1, 0]])
        q = monotone_metric(f.shape)
        dist = uniform(f.shape)
        assert directional_distance(f, q, dist, 1) == Fraction(1, 4)
        assert directional_distance(f, q, dist, 2) == Fraction(1, 4)

    def test_xor_report(self):
        f = GridFunction.from_table([[0, 1], [1, 0]])
        rep = check_dimension_reduction(
            f, monotone_metric(f.shape), uniform(f.shape)
        )
        assert rep.dist == Fraction(1, 4)
        assert rep.per_axis == (Fraction(1, 4), Fraction(1, 4))
        assert rep.axis_sum == Fraction(1, 2)
        assert rep.lower_ok and rep.upper_ok

    def test_directional_never_exceeds_global(self):
        """A global fix restricts to a fix on every line."""
        rng = Random(17)
        for _ in range(40):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -2, 2)
            dist = random_product(rng, shape)
            g = exact_distance_bruteforce(f, q, dist, with_witness=False).dist
            for r in (1, 2):
                assert directional_distance(f, q, dist, r) <= g

    def test_bounds_hold_on_random_instances(self):
        rng = Random(19)
        for _ in range(40):
            shape = HypergridShape(
                tuple(rng.randint(2, 3) for _ in range(rng.randint(1, 3)))
            )
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -2, 2)
            dist = random_product(rng, shape)
            rep = check_dimension_reduction(f, q, dist, cap=shape.size)
            assert rep.lower_ok, (shape, rep)
            assert rep.upper_ok, (shape, rep)

    def test_json_shape(self):
        f = GridFunction.from_table([[0, 1], [1, 0]])
        blob = check_dimension_reduction(
            f, monotone_metric(f.shape), uniform(f.shape)
        ).to_json()
        assert blob["dist"] == "1/4"
        assert blob["axis_sum"] == "1/2"
        assert blob["lower_ok"] and blob["upper_ok"]


class TestAxisGoodness:
    def test_column_drop_is_row_good(self):
        f = GridFunction.from_table([[0, -5], [0, -5]])
        q = monotone_metric(f.shape)
        assert is_axis_good(f, q, 1)
        assert not is_axis_good(f, q, 2)

    def test_members_are_good_everywhere(self):
        rng = Random(21)
        for _ in range(20):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            f = random_member(rng, fam)
            q = Quasimetric(fam)
            assert is_axis_good(f, q, 1) and is_axis_good(f, q, 2)


class TestMatchingWitness:
    def test_two_column_drop(self):
        """Both columns fall by 5; the two column edges beat the diagonal."""
        f = GridFunction.from_table([[0, -5], [0, -5]])
        q = monotone_metric(f.shape)
        assert noviol_witness_check(f, q, 1)

    def test_member_trivially_passes(self):
        f = GridFunction.constant(HypergridShape((2, 2)))
        assert noviol_witness_check(f, monotone_metric(f.shape), 1)

    def test_requires_axis_goodness(self):
        f = GridFunction.from_table([[0, -5], [0, -5]])
        with pytest.raises(PreconditionError):
            noviol_witness_check(f, monotone_metric(f.shape), 2)

    def test_cap(self):
        shape = HypergridShape((4, 4))
        f = GridFunction.constant(shape)
        with pytest.raises(SizeCapError):
            noviol_witness_check(f, monotone_metric(shape), 1, cap=12)

    def test_agrees_with_matching_oracle(self):
        """Same question asked of an independent matching enumerator."""
        from bdpt import build_violation_graph

        rng = Random(23)
        checked = 0
        while checked < 25:
            shape = HypergridShape((2, rng.randint(2, 3)))
            fam = random_family(rng, shape)
            q = Quasimetric(fam)
            f = random_function(rng, shape, -2, 2)
            if not is_axis_good(f, q, 1):
                continue
            graph = build_violation_graph(f, q, weighted=True)
            weighted = {
                frozenset(e): w for e, w in zip(graph.edges, graph.weights)
            }
            assert noviol_witness_check(f, q, 1) == mwmc_has_no_cross(weighted, 1)
            checked += 1
