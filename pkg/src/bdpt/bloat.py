"""Reduction from arbitrary product distributions to the uniform one.

A rational product distribution on [n_1] x ... x [n_d] becomes uniform
after "bloating": pick one denominator N for every marginal mass, blow
each axis up to [N], and let position t of axis r stand for the source
index whose contiguous segment of length N * mu_r(j) contains t.
Functions pull back by composition; the bound metric pulls back the
same way, which keeps every violation exactly in place.  Distances are
then preserved on the nose, and this module checks that equality
exactly on small instances.

The pulled-back metric cannot be written as a bounding family on the
big grid — inside a segment the two directed distances are both zero,
which a family forbids (its step bounds must satisfy l < u strictly).
It is therefore kept as a plain metric object; everything downstream
that only needs metric axioms accepts it unchanged.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from .distance import exact_distance_bruteforce, exact_distance_line
from .errors import DomainError, SizeCapError
from .grid import GridFunction, HypergridShape, Point, ProductDistribution
from .metric import Quasimetric
from .rational import Ext

BLOAT_POINT_CAP = 1_000_000


@dataclass(frozen=True)
class BloatMap:
    """The segment structure tying [N]^d back to the source grid."""

    source: HypergridShape
    denominator: int
    weights: tuple[tuple[int, ...], ...]  # per axis: N * mu_r(j), integers

    def __post_init__(self):
        if len(self.weights) != self.source.dimension:
            raise DomainError("need one weight row per axis")
        segmaps = []
        cums = []
        for r, row in enumerate(self.weights, start=1):
            if len(row) != self.source.side(r):
                raise DomainError(f"weight row {r} does not match axis {r}")
            if any(w < 0 for w in row) or sum(row) != self.denominator:
                raise DomainError(f"weight row {r} must sum to the denominator")
            ends = []
            acc = 0
            for w in row:
                acc += w
                ends.append(acc)
            cums.append(tuple(ends))
            segmaps.append(
                tuple(bisect_left(ends, t) + 1 for t in range(1, acc + 1))
            )
        object.__setattr__(self, "_cums", tuple(cums))
        object.__setattr__(self, "_segmaps", tuple(segmaps))

    @property
    def target(self) -> HypergridShape:
        return HypergridShape((self.denominator,) * self.source.dimension)

    def axis_map(self, r: int, t: int) -> int:
        """phi_r(t): the source index whose segment holds position t."""
        self.source.check_axis(r)
        if not 1 <= t <= self.denominator:
            raise DomainError(f"position {t} outside [1, {self.denominator}]")
        return self._segmaps[r - 1][t - 1]

    def map_point(self, x: Point) -> Point:
        return tuple(self._segmaps[r][t - 1] for r, t in enumerate(x))

    def preimage_axis(self, r: int, j: int) -> range:
        """The positions of segment j on axis r (empty for zero mass)."""
        self.source.check_axis(r)
        if not 1 <= j <= self.source.side(r):
            raise DomainError(f"index {j} outside axis {r}")
        ends = self._cums[r - 1]
        start = ends[j - 2] if j >= 2 else 0
        return range(start + 1, ends[j - 1] + 1)

    def preimage_count(self, x: Point) -> int:
        """|Phi^{-1}(x)| = N^d * mu(x): the cuboid volume over x."""
        self.source.check_point(x)
        out = 1
        for r, j in enumerate(x, start=1):
            out *= len(self.preimage_axis(r, j))
        return out

    def to_json(self) -> dict:
        return {
            "source": self.source.to_json(),
            "N": self.denominator,
            "weights": [list(row) for row in self.weights],
        }


def rationalize(dist: ProductDistribution, cap: int = BLOAT_POINT_CAP) -> BloatMap:
    """One common denominator for every marginal mass of every axis."""
    n_total = lcm(
        *(
            p.denominator
            for mu in dist.marginals
            for p in mu
        )
    )
    d = dist.shape.dimension
    if n_total**d > cap:
        raise SizeCapError(
            f"bloated grid needs {n_total}^{d} points (N={n_total}), cap is {cap}"
        )
    weights = tuple(
        tuple(int(p * n_total) for p in mu) for mu in dist.marginals
    )
    return BloatMap(dist.shape, n_total, weights)


def build_f_ext(f: GridFunction, bm: BloatMap) -> GridFunction:
    """Pull f back to the bloated grid: constant on every cuboid."""
    if f.shape != bm.source:
        raise DomainError("function shape does not match the bloat source")
    return GridFunction.from_callable(bm.target, lambda x: f(bm.map_point(x)))


class _BloatedLineMetric:
    """One bloated axis: d'(s, t) = base axis distance of the mapped keys."""

    __slots__ = ("axis", "segmap")

    def __init__(self, axis, segmap):
        self.axis = axis
        self.segmap = segmap

    def d(self, x: Point, y: Point) -> Ext:
        return self.axis.d(self.segmap[x[0] - 1], self.segmap[y[0] - 1])


class BloatedMetric:
    """The pulled-back metric d_ext(x, y) = d(Phi(x), Phi(y)).

    Not a bounding-family metric (intra-segment steps would need the
    forbidden l = u = 0), but it satisfies the same axioms, which is all
    the violation and distance machinery relies on.
    """

    __slots__ = ("base", "bloat", "shape")

    def __init__(self, base: Quasimetric, bloat: BloatMap):
        if base.shape != bloat.source:
            raise DomainError("metric shape does not match the bloat source")
        self.base = base
        self.bloat = bloat
        self.shape = bloat.target

    def d(self, x: Point, y: Point) -> Ext:
        return self.base.d(self.bloat.map_point(x), self.bloat.map_point(y))

    def line_metric_evaluator(self, r: int) -> _BloatedLineMetric:
        return _BloatedLineMetric(
            self.base.line_metric(r), self.bloat._segmaps[r - 1]
        )


def build_d_ext(q: Quasimetric, bm: BloatMap) -> BloatedMetric:
    return BloatedMetric(q, bm)


@dataclass(frozen=True)
class BloatEquivalenceReport:
    denominator: int
    dist_source: Fraction
    dist_bloated: Fraction
    per_line_ok: bool
    lines_checked: int

    @property
    def equal(self) -> bool:
        return self.dist_source == self.dist_bloated

    def to_json(self) -> dict:
        return {
            "N": self.denominator,
            "dist_source": f"{self.dist_source.numerator}/{self.dist_source.denominator}",
            "dist_bloated": f"{self.dist_bloated.numerator}/{self.dist_bloated.denominator}",
            "equal": self.equal,
            "per_line_ok": self.per_line_ok,
            "lines_checked": self.lines_checked,
        }


def verify_bloat_equivalence(
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    cap: int = 22,
) -> BloatEquivalenceReport:
    """Check dist_D(f) = dist_uniform(f_ext) exactly, grid-wide and per line.

    The per-line statement is stronger: every bloated line sitting over
    a source line has exactly the source line's distance (under the
    uniform marginal on [N]).
    """
    if f.shape != dist.shape or q.shape != f.shape:
        raise DomainError("function, metric and distribution shapes disagree")
    bm = rationalize(dist, cap=max(cap, BLOAT_POINT_CAP))
    if bm.target.size > cap:
        raise SizeCapError(
            f"bloated grid has {bm.target.size} points, brute-force cap is {cap}"
        )
    f_ext = build_f_ext(f, bm)
    d_ext = build_d_ext(q, bm)
    uniform = ProductDistribution.uniform(bm.target)

    a = exact_distance_bruteforce(f, q, dist, cap=cap, with_witness=False).dist
    b = exact_distance_bruteforce(
        f_ext, d_ext, uniform, cap=cap, with_witness=False
    ).dist

    n_big = bm.denominator
    uniform_marginal = tuple(Fraction(1, n_big) for _ in range(n_big))
    per_line_ok = True
    lines = 0
    for r in range(1, f.shape.dimension + 1):
        line_q = q.line_quasimetric(r)
        line_ext_q = d_ext.line_metric_evaluator(r)
        mu = dist.marginal(r)
        for base in f.shape.line_bases(r):
            src = exact_distance_line(
                f.restrict_line(r, base), line_q, mu, with_witness=False
            ).dist
            # every bloated line over this one: choose preimage positions
            # for each off-axis coordinate of the base
            off_axes = [s for s in range(1, f.shape.dimension + 1) if s != r]
            choices = [bm.preimage_axis(s, base[s - 1]) for s in off_axes]

            def lines_over():
                def rec(i, acc):
                    if i == len(off_axes):
                        yield dict(acc)
                        return
                    for t in choices[i]:
                        yield from rec(i + 1, acc + [(off_axes[i], t)])

                yield from rec(0, [])

            for assign in lines_over():
                big_base = tuple(
                    assign.get(s, 1) for s in range(1, f.shape.dimension + 1)
                )
                blo = exact_distance_line(
                    f_ext.restrict_line(r, big_base),
                    line_ext_q,
                    uniform_marginal,
                    with_witness=False,
                ).dist
                lines += 1
                if blo != src:
                    per_line_ok = False
    return BloatEquivalenceReport(bm.denominator, a, b, per_line_ok, lines)
