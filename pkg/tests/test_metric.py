"""Bounding families, the induced quasimetric, violations, and the graph."""

from fractions import Fraction
from random import Random

import pytest

from bdpt import (
    BoundingFamily,
    DomainError,
    Ext,
    GridFunction,
    HypergridShape,
    NEG_INF,
    POS_INF,
    Quasimetric,
    SizeCapError,
    build_violation_graph,
    is_member,
    is_member_all_pairs,
    is_violation,
    lipschitz_metric,
    monotone_metric,
    verify_metric_axioms,
    violation_weight,
)
from oracles import random_family, random_function, random_member


def edge_weights(graph):
    return dict(zip(graph.edges, graph.weights))


class TestBoundingFamily:
    def test_monotone_encoding(self):
        fam = BoundingFamily.monotone(HypergridShape((3,)))
        assert fam.lower[0] == (Ext(0), Ext(0))
        assert fam.upper[0] == (POS_INF, POS_INF)

    def test_lipschitz_encoding(self):
        fam = BoundingFamily.lipschitz(HypergridShape((3,)), Fraction(2))
        assert fam.lower[0] == (Ext(-2), Ext(-2))
        assert fam.upper[0] == (Ext(2), Ext(2))

    def test_mixed_axes(self):
        fam = BoundingFamily.per_axis(
            HypergridShape((3, 3)), ["monotone", ("lipschitz", 1)]
        )
        assert fam.upper[0] == (POS_INF, POS_INF)
        assert fam.upper[1] == (Ext(1), Ext(1))

    def test_strictness_l_below_u(self):
        with pytest.raises(DomainError):
            BoundingFamily.per_axis(HypergridShape((2,)), [([Ext(1)], [Ext(1)])])

    def test_l_never_plus_infinity(self):
        with pytest.raises(DomainError):
            BoundingFamily.per_axis(HypergridShape((2,)), [([POS_INF], [POS_INF])])

    def test_u_never_minus_infinity(self):
        with pytest.raises(DomainError):
            BoundingFamily.per_axis(HypergridShape((2,)), [([NEG_INF], [NEG_INF])])

    def test_json_round_trip(self):
        shape = HypergridShape((3, 2))
        fam = BoundingFamily.per_axis(
            shape, [([Ext(0), NEG_INF], [Ext(2), POS_INF]), "monotone"]
        )
        assert BoundingFamily.from_json(shape, fam.to_json()) == fam


class TestQuasimetric:
    def test_monotone_line_both_directions(self):
        q = monotone_metric(HypergridShape((3,)))
        assert q.d((1,), (3,)) == Ext(0)
        assert q.d((3,), (1,)) == POS_INF

    def test_lipschitz_is_scaled_l1(self):
        q = lipschitz_metric(HypergridShape((3, 2)), 1)
        assert q.d((1, 1), (3, 2)) == Ext(3)
        assert q.d((3, 2), (1, 1)) == Ext(3)

    def test_identity(self):
        for q in (
            monotone_metric(HypergridShape((4,))),
            lipschitz_metric(HypergridShape((2, 2)), 2),
        ):
            for x in q.shape.points():
                assert q.d(x, x) == Ext(0)

    def test_can_be_negative(self):
        # steps bounded into [1, 2]: f must climb at least 1 per step, so the
        # constraint f(1) - f(3) <= d((1,),(3,)) carries a negative bound
        fam = BoundingFamily.per_axis(
            HypergridShape((3,)), [([Ext(1), Ext(1)], [Ext(2), Ext(2)])]
        )
        q = Quasimetric(fam)
        assert q.d((1,), (3,)) == Ext(-2)
        assert q.d((3,), (1,)) == Ext(4)

    def test_axioms_hold_for_stock_families(self):
        """Triangle, linearity, projection: exhaustive on small grids."""
        for q in (
            monotone_metric(HypergridShape((3, 3))),
            lipschitz_metric(HypergridShape((4,)), 1),
            lipschitz_metric(HypergridShape((2, 2, 2)), Fraction(1, 2)),
        ):
            assert verify_metric_axioms(q, q.shape).ok

    def test_axioms_hold_for_random_families(self):
        rng = Random(3)
        for _ in range(12):
            shape = HypergridShape((rng.randint(2, 4), rng.randint(2, 3)))
            q = Quasimetric(random_family(rng, shape))
            assert verify_metric_axioms(q, shape).ok

    def test_axiom_checker_flags_a_broken_metric(self):
        """Negative control: a corrupted evaluator must produce failures."""

        class Broken:
            def d(self, x, y):
                return Ext(1)  # violates d(x,x) = 0, and triangle with slack

        report = verify_metric_axioms(Broken(), HypergridShape((3,)))
        assert not report.ok
        assert report.identity_failures

    def test_axiom_cap(self):
        with pytest.raises(SizeCapError):
            verify_metric_axioms(
                monotone_metric(HypergridShape((40, 40))), HypergridShape((40, 40))
            )


class TestMembership:
    def test_sorted_line_is_monotone(self):
        f = GridFunction.from_table([1, 2, 3])
        assert is_member(f, BoundingFamily.monotone(f.shape))

    def test_descending_pair_is_not(self):
        f = GridFunction.from_table([2, 1])
        assert not is_member(f, BoundingFamily.monotone(f.shape))

    def test_big_jump_breaks_lipschitz(self):
        f = GridFunction.from_table([0, 1, 3])
        assert not is_member(f, BoundingFamily.lipschitz(f.shape, 1))

    def test_step_form_equals_all_pairs_form(self):
        """Derivative bounds hold iff f(x) - f(y) <= d(x,y) for all pairs."""
        rng = Random(29)
        for _ in range(60):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            f = random_function(rng, shape, -3, 3)
            assert is_member(f, fam) == is_member_all_pairs(f, Quasimetric(fam))

    def test_members_generated_from_walks_pass(self):
        rng = Random(31)
        for _ in range(40):
            shape = HypergridShape((rng.randint(2, 4),) * rng.randint(1, 2))
            fam = random_family(rng, shape)
            assert is_member(random_member(rng, fam), fam)


class TestViolations:
    def test_comparable_monotone_pair_clean(self):
        f = GridFunction.from_table([1, 2])
        q = monotone_metric(f.shape)
        assert not is_violation(f, q, (1,), (2,))

    def test_descending_pair_violates(self):
        f = GridFunction.from_table([2, 1])
        q = monotone_metric(f.shape)
        assert is_violation(f, q, (1,), (2,))
        assert is_violation(f, q, (2,), (1,))  # unordered predicate

    def test_violation_on_a_grid_edge(self):
        f = GridFunction.from_table([[0, 2], [0, 1]])
        q = monotone_metric(f.shape)
        assert is_violation(f, q, (1, 2), (2, 2))

    def test_same_point_rejected(self):
        f = GridFunction.from_table([1, 2])
        with pytest.raises(DomainError):
            is_violation(f, monotone_metric(f.shape), (1,), (1,))

    def test_weight_positive_on_violations(self):
        f = GridFunction.from_table([2, 1])
        q = monotone_metric(f.shape)
        assert violation_weight(f, q, (1,), (2,)) == 1

    def test_weight_rejects_clean_pair(self):
        f = GridFunction.from_table([1, 2])
        with pytest.raises(DomainError):
            violation_weight(f, monotone_metric(f.shape), (1,), (2,))


class TestViolationGraph:
    def test_member_gives_empty_graph(self):
        f = GridFunction.from_table([1, 1, 2])
        g = build_violation_graph(f, monotone_metric(f.shape))
        assert g.is_empty()

    def test_reverse_sorted_line_is_a_clique(self):
        f = GridFunction.from_table([3, 2, 1])
        g = build_violation_graph(f, monotone_metric(f.shape), weighted=True)
        assert g.edge_set == {
            ((1,), (2,)),
            ((1,), (3,)),
            ((2,), (3,)),
        }
        # the surplus f(x)-f(y)-d(x,y); d = 0 upward, so gaps survive whole
        assert edge_weights(g)[((1,), (3,))] == 2

    def test_single_edge_weight(self):
        f = GridFunction.from_table([2, 1])
        g = build_violation_graph(f, monotone_metric(f.shape), weighted=True)
        assert g.edges == (((1,), (2,)),)
        assert g.weights == (Fraction(1),)

    def test_member_iff_empty_both_directions(self):
        rng = Random(37)
        for _ in range(80):
            shape = HypergridShape((rng.randint(2, 3), rng.randint(2, 3)))
            fam = random_family(rng, shape)
            f = random_function(rng, shape, -2, 2)
            empty = build_violation_graph(f, Quasimetric(fam)).is_empty()
            assert empty == is_member(f, fam)

    def test_all_weights_strictly_positive(self):
        rng = Random(41)
        for _ in range(40):
            shape = HypergridShape((rng.randint(2, 4),))
            fam = random_family(rng, shape)
            f = random_function(rng, shape, -3, 3)
            g = build_violation_graph(f, Quasimetric(fam), weighted=True)
            assert all(w > 0 for w in g.weights)

    def test_covered_by(self):
        f = GridFunction.from_table([3, 2, 1])
        g = build_violation_graph(f, monotone_metric(f.shape))
        assert g.covered_by([(1,), (3,)])
        assert not g.covered_by([(1,)])

    def test_cap(self):
        shape = HypergridShape((70, 70))
        f = GridFunction.constant(shape)
        with pytest.raises(SizeCapError):
            build_violation_graph(f, monotone_metric(shape))
