"""Path testers: step probabilities, budgets, abort semantics, tapes."""

from fractions import Fraction
from math import ceil
from random import Random

import pytest

from bdpt import (
    ACCEPT,
    DomainError,
    Ext,
    GridFunction,
    HypergridShape,
    ProductDistribution,
    REJECT,
    build_balanced_bst,
    build_median_bst,
    distribution_free_tester,
    distribution_free_tester_step,
    estimate_rejection_prob,
    exact_distance_line,
    exact_rejection_prob_grid,
    exact_rejection_prob_line,
    expected_grid_step_queries,
    expected_line_step_queries,
    hypergrid_tester,
    hypergrid_tester_step,
    line_tester,
    line_tester_step,
    monotone_metric,
)
from oracles import random_marginal, random_member, random_product

UNIFORM2 = (Fraction(1, 2), Fraction(1, 2))
UNIFORM3 = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))


def descending_pair():
    """f = (2, 1) with the root-1 tree: the probe rejects iff it draws 2."""
    f = GridFunction.from_table([2, 1])
    return build_median_bst(UNIFORM2), f, monotone_metric(f.shape)


class TestLineStep:
    def test_root_draw_is_free_and_accepts(self):
        tree, f, q = descending_pair()
        # the uniform-2 sampler maps tape value 0 to key 1 (the root)
        run = line_tester_step(tree, f, q, UNIFORM2, _FixedTape([0]))
        assert run.verdict == ACCEPT
        assert run.queries_used == 0

    def test_nonroot_draw_walks_the_path_and_rejects(self):
        tree, f, q = descending_pair()
        run = line_tester_step(tree, f, q, UNIFORM2, _FixedTape([1]))
        assert run.verdict == REJECT
        assert run.queries_used == 2
        assert set(run.witness) == {(1,), (2,)}

    def test_step_probability_one_half(self):
        tree, f, q = descending_pair()
        assert exact_rejection_prob_line(tree, f, q, UNIFORM2) == Fraction(1, 2)

    def test_median_tree_on_reverse_sorted_triple(self):
        """Root 2; both non-root keys see a violation on their path."""
        f = GridFunction.from_table([3, 2, 1])
        tree = build_median_bst(UNIFORM3)
        q = monotone_metric(f.shape)
        assert tree.root == 2
        assert exact_rejection_prob_line(tree, f, q, UNIFORM3) == Fraction(2, 3)
        rejecting = {
            v
            for v in (1, 3)
            if line_tester_step(tree, f, q, UNIFORM3, _KeyTape(v)).verdict == REJECT
        }
        assert rejecting == {1, 3}

    def test_member_never_rejects(self):
        f = GridFunction.from_table([1, 1, 2, 5])
        tree = build_median_bst((Fraction(1, 4),) * 4)
        q = monotone_metric(f.shape)
        assert exact_rejection_prob_line(tree, f, q, (Fraction(1, 4),) * 4) == 0

    def test_prob_at_least_distance(self):
        """Keys violating with an ancestor cover the violation graph."""
        rng = Random(11)
        for _ in range(40):
            n = rng.randint(2, 7)
            mu = random_marginal(rng, n)
            f = GridFunction(
                HypergridShape((n,)),
                tuple(Fraction(rng.randint(0, 3)) for _ in range(n)),
            )
            q = monotone_metric(f.shape)
            tree = build_median_bst(mu)
            assert exact_rejection_prob_line(
                tree, f, q, mu
            ) >= exact_distance_line(f, q, mu).dist


class _Tape(Random):
    """Random whose randrange yields a scripted sequence (for tape control).

    Built through the factory below: Random.__new__ hashes constructor
    arguments, so the script is attached after construction.
    """

    def randrange(self, *args, **kwargs):
        return self._values.pop(0)


def _FixedTape(values):
    tape = _Tape()
    tape._values = list(values)
    return tape


def _KeyTape(key):
    """Tape that makes a uniform sampler produce the chosen key."""
    return _FixedTape([key - 1])


class TestLineRun:
    def test_budget_and_step_count(self):
        tree, f, q = descending_pair()
        run = line_tester(tree, f, q, UNIFORM2, Fraction(1, 2), Random(0))
        # Delta = 1/2, so the cap is ceil(24 * (1/2) / (1/2)) = 24
        assert run.budget == 24
        assert run.steps == 4
        assert run.queries_used <= run.budget

    def test_full_run_rejection_rate(self):
        """Four independent probes at p = 1/2 reject with prob 15/16."""
        tree, f, q = descending_pair()
        est, (lo, hi) = estimate_rejection_prob(
            lambda rng: line_tester(tree, f, q, UNIFORM2, Fraction(1, 2), rng),
            trials=4000,
            seed="full-run",
        )
        assert lo <= Fraction(15, 16) <= hi

    def test_member_accepts(self):
        f = GridFunction.from_table([0, 2, 2, 7])
        mu = (Fraction(1, 4),) * 4
        run = line_tester(
            f=f,
            tree=build_median_bst(mu),
            q=monotone_metric(f.shape),
            marginal=mu,
            epsilon=Fraction(1, 5),
            rng=Random(1),
        )
        assert run.verdict == ACCEPT
        assert run.witness is None

    def test_abort_preserves_an_earlier_rejection(self):
        """A step that would overflow the cap is never queried, but a
        violation already on the record still rejects."""
        f = GridFunction.from_table([2, 1])
        mu = (Fraction(23, 24), Fraction(1, 24))
        tree = build_median_bst(mu)
        q = monotone_metric(f.shape)
        # Delta = 1/24 so the cap is ceil(48/24) = 2: exactly one key-2 probe
        # fits.  Seed chosen so the tape draws key 2 at least twice.
        seed = _double_hit_seed(mu)
        run = line_tester(tree, f, q, mu, Fraction(1, 2), Random(seed))
        assert run.budget == 2
        assert run.aborted
        assert run.verdict == REJECT
        assert run.queries_used == 2

    def test_abort_without_violation_accepts(self):
        f = GridFunction.from_table([1, 2])
        mu = (Fraction(23, 24), Fraction(1, 24))
        tree = build_median_bst(mu)
        run = line_tester(
            tree, f, monotone_metric(f.shape), mu, Fraction(1, 2),
            Random(_double_hit_seed(mu)),
        )
        assert run.aborted
        assert run.verdict == ACCEPT

    def test_rejects_are_witnessed_violations(self):
        rng = Random(13)
        f = GridFunction.from_table([5, 4, 3, 2, 1])
        mu = (Fraction(1, 5),) * 5
        q = monotone_metric(f.shape)
        tree = build_median_bst(mu)
        run = line_tester(tree, f, q, mu, Fraction(1, 5), rng)
        assert run.verdict == REJECT
        x, y = run.witness
        assert Ext(f(x) - f(y)) > q.d(x, y) or Ext(f(y) - f(x)) > q.d(y, x)

    def test_marginal_length_checked(self):
        tree, f, q = descending_pair()
        with pytest.raises(DomainError):
            line_tester(tree, f, q, UNIFORM3, Fraction(1, 2), Random(0))

    def test_epsilon_range_checked(self):
        tree, f, q = descending_pair()
        with pytest.raises(DomainError):
            line_tester(tree, f, q, UNIFORM2, Fraction(3, 2), Random(0))


def _double_hit_seed(mu):
    """First seed whose four-step tape draws the rare key twice."""
    den = mu[0].denominator
    hit = den - mu[-1].numerator * (den // mu[-1].denominator)
    for seed in range(10_000):
        rng = Random(seed)
        if sum(rng.randrange(den) >= hit for _ in range(4)) >= 2:
            return seed
    raise AssertionError("no seed found")


def xor_grid():
    """f(1,1)=0, f(1,2)=1, f(2,1)=1, f(2,2)=0 on the 2x2 grid."""
    f = GridFunction.from_table([[0, 1], [1, 0]])
    q = monotone_metric(f.shape)
    dist = ProductDistribution.uniform(f.shape)
    trees = [build_median_bst(dist.marginal(r)) for r in (1, 2)]
    return trees, f, q, dist


class TestGridStep:
    def test_xor_step_probability_exact(self):
        trees, f, q, dist = xor_grid()
        p = exact_rejection_prob_grid(trees, f, q, dist)
        assert p == Fraction(1, 4)

    def test_xor_step_probability_meets_distance_bound(self):
        trees, f, q, dist = xor_grid()
        p = exact_rejection_prob_grid(trees, f, q, dist)
        d = f.shape.dimension
        assert p >= Fraction(1, 4) / (4 * d)  # dist = 1/4 here

    def test_xor_monte_carlo_agrees(self):
        trees, f, q, dist = xor_grid()
        est, (lo, hi) = estimate_rejection_prob(
            lambda rng: hypergrid_tester_step(trees, f, q, dist, rng),
            trials=4000,
            seed="xor",
        )
        assert lo <= Fraction(1, 4) <= hi

    def test_tape_order_point_axis_key(self):
        """A step consumes: the d coordinates of x, the axis, the key."""
        trees, f, q, dist = xor_grid()
        for seed in range(25):
            shadow = Random(seed)
            x = dist.sample(shadow)
            r = 1 + shadow.randrange(2)
            v = dist.sample_axis(r, shadow)
            run = hypergrid_tester_step(trees, f, q, dist, Random(seed))
            step = run.trace[0]
            assert step.point == x
            assert step.axis == r
            if v == trees[r - 1].root:
                assert step.path == ()
            else:
                assert step.path[0] == v
                assert step.path[-1] == trees[r - 1].root

    def test_one_axis_grid_matches_line_probability(self):
        f = GridFunction.from_table([3, 2, 1])
        q = monotone_metric(f.shape)
        dist = ProductDistribution.uniform(f.shape)
        tree = build_median_bst(UNIFORM3)
        assert exact_rejection_prob_grid(
            [tree], f, q, dist
        ) == exact_rejection_prob_line(tree, f, q, UNIFORM3)

    def test_member_probability_zero(self):
        rng = Random(17)
        for _ in range(10):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            dist = random_product(rng, shape)
            q = monotone_metric(shape)
            f = random_member(rng, q.family)
            trees = [build_median_bst(dist.marginal(r)) for r in (1, 2)]
            assert exact_rejection_prob_grid(trees, f, q, dist) == 0


class TestGridRun:
    def test_budget_formula(self):
        trees, f, q, dist = xor_grid()
        run = hypergrid_tester(trees, f, q, dist, Fraction(1, 2), Random(3))
        delta_sum = sum(
            t.expected_depth(dist.marginal(r)) for r, t in enumerate(trees, 1)
        )
        assert run.budget == ceil(100 * delta_sum / Fraction(1, 2))
        assert run.queries_used <= run.budget

    def test_step_count(self):
        trees, f, q, dist = xor_grid()
        run = hypergrid_tester(trees, f, q, dist, Fraction(1, 2), Random(3))
        assert run.steps == ceil(8 * 2 / Fraction(1, 2))

    def test_queried_points_depend_only_on_the_tape(self):
        """Non-adaptivity: replaying the seed on a different function of the
        same shape queries the identical multiset of points."""
        trees, f, q, dist = xor_grid()
        g = GridFunction.from_table([[7, 0], [5, 5]])
        for seed in range(8):
            run_f = hypergrid_tester(trees, f, q, dist, Fraction(1, 2), Random(seed))
            run_g = hypergrid_tester(trees, g, q, dist, Fraction(1, 2), Random(seed))
            assert sorted(run_f.queried_points()) == sorted(run_g.queried_points())

    def test_expected_step_queries_at_most_twice_average_depth(self):
        rng = Random(19)
        for _ in range(30):
            shape = HypergridShape(tuple(rng.randint(2, 6) for _ in range(rng.randint(1, 3))))
            dist = random_product(rng, shape)
            trees = [
                build_median_bst(dist.marginal(r))
                for r in range(1, shape.dimension + 1)
            ]
            e = expected_grid_step_queries(trees, dist)
            delta_sum = sum(
                t.expected_depth(dist.marginal(r)) for r, t in enumerate(trees, 1)
            )
            assert e <= 2 * delta_sum / shape.dimension

    def test_expected_line_step_queries_frozen(self):
        tree = build_median_bst(UNIFORM3)
        # non-root keys 1 and 3 each cost depth 1 + 1 = 2
        assert expected_line_step_queries(tree, UNIFORM3) == Fraction(4, 3)

    def test_expected_grid_step_queries_frozen(self):
        trees, f, q, dist = xor_grid()
        assert expected_grid_step_queries(trees, dist) == 1

    def test_rejects_far_function(self):
        trees, f, q, dist = xor_grid()
        runs = [
            hypergrid_tester(trees, f, q, dist, Fraction(1, 4), Random(s))
            for s in range(30)
        ]
        assert sum(r.verdict == REJECT for r in runs) >= 25

    def test_shape_mismatch_rejected(self):
        trees, f, q, dist = xor_grid()
        other = ProductDistribution.uniform(HypergridShape((3, 2)))
        with pytest.raises(DomainError):
            hypergrid_tester(trees, f, q, other, Fraction(1, 2), Random(0))
        with pytest.raises(DomainError):
            hypergrid_tester(trees[:1], f, q, dist, Fraction(1, 2), Random(0))


class TestDistributionFree:
    def test_hidden_uniform_step_probability(self):
        f = GridFunction.from_table([2, 1])
        q = monotone_metric(f.shape)
        trees = [build_balanced_bst(2)]

        def source(rng):
            return (rng.randint(1, 2),)

        est, (lo, hi) = estimate_rejection_prob(
            lambda rng: distribution_free_tester_step(trees, f, q, source, rng),
            trials=2000,
            seed="hidden",
        )
        assert lo <= Fraction(1, 2) <= hi

    def test_budget_uses_log_cap(self):
        shape = HypergridShape((5, 5))
        f = GridFunction.constant(shape)
        q = monotone_metric(shape)

        def source(rng):
            return (rng.randint(1, 5), rng.randint(1, 5))

        run = distribution_free_tester(f, q, source, Fraction(1, 2), Random(0))
        # each axis contributes (5-1).bit_length() = 3
        assert run.budget == ceil(Fraction(100 * 6) / Fraction(1, 2))
        assert run.verdict == ACCEPT

    def test_rejects_far_function_under_skewed_source(self):
        f = GridFunction.from_table([5, 4, 3, 2, 1])
        q = monotone_metric(f.shape)

        def source(rng):
            return (rng.choices(range(1, 6), weights=(1, 1, 1, 1, 4))[0],)

        runs = [
            distribution_free_tester(f, q, source, Fraction(1, 5), Random(s))
            for s in range(20)
        ]
        assert all(r.verdict == REJECT for r in runs)

    def test_out_of_range_sample_rejected(self):
        f = GridFunction.from_table([1, 2])
        q = monotone_metric(f.shape)
        with pytest.raises(DomainError):
            distribution_free_tester(f, q, lambda rng: (3,), Fraction(1, 2), Random(0))


class TestEstimation:
    def test_deterministic_in_seed(self):
        tree, f, q = descending_pair()
        step = lambda rng: line_tester_step(tree, f, q, UNIFORM2, rng)
        a = estimate_rejection_prob(step, trials=500, seed=42)
        b = estimate_rejection_prob(step, trials=500, seed=42)
        assert a == b

    def test_zero_probability_estimates_zero(self):
        f = GridFunction.from_table([1, 2, 3])
        tree = build_median_bst(UNIFORM3)
        step = lambda rng: line_tester_step(
            tree, f, monotone_metric(f.shape), UNIFORM3, rng
        )
        est, (lo, hi) = estimate_rejection_prob(step, trials=200, seed=0)
        assert est == 0
        assert lo == 0
        assert hi < Fraction(1, 20)

    def test_interval_is_ordered_and_clamped(self):
        tree, f, q = descending_pair()
        est, (lo, hi) = estimate_rejection_prob(
            lambda rng: line_tester_step(tree, f, q, UNIFORM2, rng),
            trials=100,
            seed=7,
        )
        assert 0 <= lo <= est <= hi <= 1

    def test_trials_validated(self):
        with pytest.raises(DomainError):
            estimate_rejection_prob(lambda rng: True, trials=0, seed=0)


class TestRunSerialization:
    def test_json_fields(self):
        tree, f, q = descending_pair()
        run = line_tester(tree, f, q, UNIFORM2, Fraction(1, 2), Random(5))
        blob = run.to_json()
        assert set(blob) == {"verdict", "queries", "witness", "aborted", "budget", "steps"}
        assert blob["queries"] == run.queries_used
        if run.witness:
            assert blob["witness"] == [list(p) for p in run.witness]
