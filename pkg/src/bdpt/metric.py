"""Bounding families, the induced quasimetric, and violation machinery.

A bounding family constrains each discrete partial derivative of a function
on the hypergrid: along axis ``r`` the step from key ``t`` to ``t+1`` must lie
in ``[l_r(t), u_r(t)]``, where the lower bounds may be -inf and the upper
bounds +inf.  Monotonicity is ``(0, +inf)`` on every step, a c-Lipschitz
constraint is ``(-c, +c)``, and axes may mix constraints freely.

The family induces a shortest-path weight between grid points

    d(x, y) = sum over axes with x_r > y_r of  u_r(y_r) + ... + u_r(x_r - 1)
            - sum over axes with x_r < y_r of  l_r(x_r) + ... + l_r(y_r - 1)

which may be negative and is generally asymmetric.  A function satisfies the
family's constraints exactly when f(x) - f(y) <= d(x, y) for every ordered
pair, and a pair violates the property when that fails in either direction.

Infinite bounds are kept out of the hot path by storing, per axis, prefix
sums of the finite parts alongside prefix counts of infinite entries, so any
interval sum is two array lookups regardless of infinities.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .errors import DomainError, SizeCapError
from .grid import GridFunction, HypergridShape, Point
from .rational import NEG_INF, POS_INF, Ext, format_ext, parse_ext

ALL_PAIRS_POINT_CAP = 4096
AXIOM_POINT_CAP = 512


@dataclass(frozen=True)
class BoundingFamily:
    """Per-axis derivative bounds: l_r(t) < u_r(t) for every interior step."""

    shape: HypergridShape
    lower: tuple[tuple[Ext, ...], ...]
    upper: tuple[tuple[Ext, ...], ...]

    def __post_init__(self):
        if len(self.lower) != self.shape.dimension or len(self.upper) != self.shape.dimension:
            raise DomainError("need one bound vector pair per axis")
        for r, n in enumerate(self.shape.side_lengths, start=1):
            lo, up = self.lower[r - 1], self.upper[r - 1]
            if len(lo) != n - 1 or len(up) != n - 1:
                raise DomainError(f"axis {r} needs exactly {n - 1} step bounds")
            for t, (a, b) in enumerate(zip(lo, up), start=1):
                if a == POS_INF:
                    raise DomainError(f"lower bound +inf at axis {r}, step {t}")
                if b == NEG_INF:
                    raise DomainError(f"upper bound -inf at axis {r}, step {t}")
                if not a < b:
                    raise DomainError(
                        f"need l < u at axis {r}, step {t}: {a!r} vs {b!r}"
                    )

    # -- constructors --------------------------------------------------------

    @staticmethod
    def monotone(shape: HypergridShape) -> "BoundingFamily":
        return BoundingFamily(
            shape,
            tuple(tuple(Ext(0) for _ in range(n - 1)) for n in shape.side_lengths),
            tuple(tuple(POS_INF for _ in range(n - 1)) for n in shape.side_lengths),
        )

    @staticmethod
    def lipschitz(shape: HypergridShape, c: Fraction | int = 1) -> "BoundingFamily":
        c = Fraction(c)
        if c <= 0:
            raise DomainError("Lipschitz constant must be positive")
        return BoundingFamily(
            shape,
            tuple(tuple(Ext(-c) for _ in range(n - 1)) for n in shape.side_lengths),
            tuple(tuple(Ext(c) for _ in range(n - 1)) for n in shape.side_lengths),
        )

    @staticmethod
    def per_axis(shape: HypergridShape, specs: Sequence) -> "BoundingFamily":
        """Mix constraints per axis.

        Each spec is "monotone", ("lipschitz", c), or an explicit pair of
        bound sequences (lower, upper) whose entries are Ext or rationals.
        """
        lowers, uppers = [], []
        for r, (spec, n) in enumerate(zip(specs, shape.side_lengths), start=1):
            if spec == "monotone":
                lowers.append(tuple(Ext(0) for _ in range(n - 1)))
                uppers.append(tuple(POS_INF for _ in range(n - 1)))
            elif isinstance(spec, tuple) and len(spec) == 2 and spec[0] == "lipschitz":
                c = Fraction(spec[1])
                lowers.append(tuple(Ext(-c) for _ in range(n - 1)))
                uppers.append(tuple(Ext(c) for _ in range(n - 1)))
            elif isinstance(spec, tuple) and len(spec) == 2:
                lo, up = spec
                lowers.append(tuple(Ext.of(v) for v in lo))
                uppers.append(tuple(Ext.of(v) for v in up))
            else:
                raise DomainError(f"unrecognized axis spec for axis {r}: {spec!r}")
        return BoundingFamily(shape, tuple(lowers), tuple(uppers))

    # -- text encoding ------------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [
            {
                "lower": [format_ext(v) for v in self.lower[r]],
                "upper": [format_ext(v) for v in self.upper[r]],
            }
            for r in range(self.shape.dimension)
        ]

    @staticmethod
    def from_json(shape: HypergridShape, data) -> "BoundingFamily":
        """Accepts the per-axis dict form or the shorthand tokens."""
        if isinstance(data, str):
            return BoundingFamily._from_token(shape, data)
        specs = []
        for axis in data:
            if isinstance(axis, str):
                specs.append(BoundingFamily._token_spec(axis))
            else:
                specs.append(
                    (
                        tuple(parse_ext(v) for v in axis["lower"]),
                        tuple(parse_ext(v) for v in axis["upper"]),
                    )
                )
        return BoundingFamily.per_axis(shape, specs)

    @staticmethod
    def _token_spec(token: str):
        if token == "monotone":
            return "monotone"
        if token.startswith("lipschitz:"):
            return ("lipschitz", Fraction(token.split(":", 1)[1]))
        raise DomainError(f"unknown family token: {token!r}")

    @staticmethod
    def _from_token(shape: HypergridShape, token: str) -> "BoundingFamily":
        if token == "monotone":
            return BoundingFamily.monotone(shape)
        if token.startswith("lipschitz:"):
            return BoundingFamily.lipschitz(shape, Fraction(token.split(":", 1)[1]))
        raise DomainError(f"unknown family token: {token!r}")

    def all_finite(self) -> bool:
        return all(
            v.is_finite for vec in itertools.chain(self.lower, self.upper) for v in vec
        )

    def axis_family(self, r: int) -> "BoundingFamily":
        """The induced one-dimensional family on axis ``r``."""
        self.shape.check_axis(r)
        return BoundingFamily(
            HypergridShape((self.shape.side(r),)),
            (self.lower[r - 1],),
            (self.upper[r - 1],),
        )


class AxisMetric:
    """The 1D quasimetric along one axis, backed by the family's prefix sums.

    d(i, j) for keys i > j is the sum of upper bounds on the steps between
    them; for i < j it is minus the sum of lower bounds.  O(1) per call.
    """

    __slots__ = ("n", "_ufin", "_uinf", "_lfin", "_linf")

    def __init__(self, lower: Sequence[Ext], upper: Sequence[Ext]):
        self.n = len(lower) + 1
        ufin, uinf = [Fraction(0)], [0]
        for v in upper:
            ufin.append(ufin[-1] + (v.value if v.is_finite else 0))
            uinf.append(uinf[-1] + (0 if v.is_finite else 1))
        lfin, linf = [Fraction(0)], [0]
        for v in lower:
            lfin.append(lfin[-1] + (v.value if v.is_finite else 0))
            linf.append(linf[-1] + (0 if v.is_finite else 1))
        self._ufin, self._uinf = tuple(ufin), tuple(uinf)
        self._lfin, self._linf = tuple(lfin), tuple(linf)

    def upper_sum(self, a: int, b: int) -> Ext:
        """Sum of u(t) over steps t in [a, b); +inf if any step is unbounded."""
        if self._uinf[b - 1] - self._uinf[a - 1] > 0:
            return POS_INF
        return Ext(self._ufin[b - 1] - self._ufin[a - 1])

    def lower_sum(self, a: int, b: int) -> Ext:
        if self._linf[b - 1] - self._linf[a - 1] > 0:
            return NEG_INF
        return Ext(self._lfin[b - 1] - self._lfin[a - 1])

    def d(self, i: int, j: int) -> Ext:
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise DomainError(f"key out of range 1..{self.n}")
        if i == j:
            return Ext(0)
        if i > j:
            return self.upper_sum(j, i)
        return -self.lower_sum(i, j)


class Quasimetric:
    """The shortest-path weight induced by a bounding family."""

    __slots__ = ("family", "shape", "_axes")

    def __init__(self, family: BoundingFamily):
        self.family = family
        self.shape = family.shape
        self._axes = tuple(
            AxisMetric(lo, up) for lo, up in zip(family.lower, family.upper)
        )

    def line_metric(self, r: int) -> AxisMetric:
        self.shape.check_axis(r)
        return self._axes[r - 1]

    def line_quasimetric(self, r: int) -> "Quasimetric":
        """The metric the axis-``r`` bounds induce on a single line."""
        return Quasimetric(self.family.axis_family(r))

    def d(self, x: Point, y: Point) -> Ext:
        """Exact metric value; finite Fraction or +inf, never -inf."""
        self.shape.check_point(x)
        self.shape.check_point(y)
        total = Fraction(0)
        for axis, (xi, yi) in zip(self._axes, zip(x, y)):
            if xi > yi:
                term = axis.upper_sum(yi, xi)
            elif xi < yi:
                term = -axis.lower_sum(xi, yi)
            else:
                continue
            if not term.is_finite:
                # each term exceeds -inf, so any infinite term forces +inf
                return POS_INF
            total += term.value
        return Ext(total)


def monotone_metric(shape: HypergridShape) -> Quasimetric:
    return Quasimetric(BoundingFamily.monotone(shape))


def lipschitz_metric(shape: HypergridShape, c: Fraction | int = 1) -> Quasimetric:
    return Quasimetric(BoundingFamily.lipschitz(shape, c))


# -- membership and violations -------------------------------------------------


def is_member(f: GridFunction, family: BoundingFamily) -> bool:
    """Derivative test: every axis-adjacent step lies within its bounds."""
    if f.shape != family.shape:
        raise DomainError("function and family shapes disagree")
    shape = f.shape
    for r in range(1, shape.dimension + 1):
        lo, up = family.lower[r - 1], family.upper[r - 1]
        for base in shape.line_bases(r):
            line = [f.values[shape.index(p)] for p in shape.line_points(r, base)]
            for t in range(len(line) - 1):
                step = line[t + 1] - line[t]
                if lo[t] > step or up[t] < step:
                    return False
    return True


def is_member_all_pairs(
    f: GridFunction, metric, cap: int = ALL_PAIRS_POINT_CAP
) -> bool:
    """Debug form of membership: f(x) - f(y) <= d(x, y) over all ordered pairs."""
    shape = f.shape
    if shape.size > cap:
        raise SizeCapError(f"all-pairs check over {shape.size} points exceeds cap {cap}")
    pts = list(shape.points())
    for x in pts:
        fx = f(x)
        for y in pts:
            if x != y and Ext(fx - f(y)) > metric.d(x, y):
                return False
    return True


def is_violation(f: GridFunction, metric, x: Point, y: Point) -> bool:
    """Whether the unordered pair {x, y} breaks the property, either direction."""
    if x == y:
        raise DomainError("a violation needs two distinct points")
    fx, fy = f(x), f(y)
    return Ext(fx - fy) > metric.d(x, y) or Ext(fy - fx) > metric.d(y, x)


def violation_weight(f: GridFunction, metric, x: Point, y: Point) -> Fraction:
    """max(f(x)-f(y)-d(x,y), f(y)-f(x)-d(y,x)); strictly positive on violations."""
    if x == y:
        raise DomainError("a violation needs two distinct points")
    fx, fy = f(x), f(y)
    best: Optional[Fraction] = None
    dxy = metric.d(x, y)
    if dxy.is_finite:
        best = fx - fy - dxy.value
    dyx = metric.d(y, x)
    if dyx.is_finite:
        cand = fy - fx - dyx.value
        best = cand if best is None else max(best, cand)
    if best is None or best <= 0:
        raise DomainError(f"pair {x}, {y} is not a violation")
    return best


@dataclass(frozen=True)
class ViolationGraph:
    """All violating unordered pairs of a function, with optional weights."""

    shape: HypergridShape
    edges: tuple[tuple[Point, Point], ...]
    weights: Optional[tuple[Fraction, ...]] = None

    @property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def is_empty(self) -> bool:
        return not self.edges

    def covered_by(self, cover: Iterable[Point]) -> bool:
        c = set(cover)
        return all(x in c or y in c for x, y in self.edges)


def build_violation_graph(
    f: GridFunction,
    metric,
    weighted: bool = False,
    cap: int = ALL_PAIRS_POINT_CAP,
) -> ViolationGraph:
    shape = f.shape
    if shape.size > cap:
        raise SizeCapError(
            f"violation graph over {shape.size} points exceeds cap {cap}"
        )
    pts = list(shape.points())
    edges: list[tuple[Point, Point]] = []
    weights: list[Fraction] = []
    for i, x in enumerate(pts):
        for y in pts[i + 1 :]:
            if is_violation(f, metric, x, y):
                edges.append((x, y))
                if weighted:
                    weights.append(violation_weight(f, metric, x, y))
    return ViolationGraph(
        shape, tuple(edges), tuple(weights) if weighted else None
    )


# -- axiom verification -----------------------------------------------------------


@dataclass(frozen=True)
class MetricAxiomReport:
    identity_failures: tuple[Point, ...]
    triangle_failures: tuple[tuple[Point, Point, Point], ...]
    linearity_failures: tuple[tuple[Point, Point, Point], ...]
    projection_failures: tuple[tuple[Point, Point, Point, Point], ...]

    @property
    def ok(self) -> bool:
        return not (
            self.identity_failures
            or self.triangle_failures
            or self.linearity_failures
            or self.projection_failures
        )


def _between(x: Point, y: Point, z: Point) -> bool:
    """y coordinate-wise between x and z (inclusive), per axis independently."""
    return all(min(a, c) <= b <= max(a, c) for a, b, c in zip(x, y, z))


def verify_metric_axioms(
    metric, shape: HypergridShape, cap: int = AXIOM_POINT_CAP
) -> MetricAxiomReport:
    """Enumerate identity, triangle, linearity, and projection conditions.

    Triangle: d(x,z) <= d(x,y) + d(y,z) over all ordered triples.  Linearity:
    equality whenever y is coordinate-wise between x and z.  Projection: for
    points agreeing on axis r, sliding both to another r-slice preserves their
    distance, and the two sliding moves cost the same.
    """
    if shape.size > cap:
        raise SizeCapError(f"axiom check over {shape.size} points exceeds cap {cap}")
    pts = list(shape.points())
    identity = tuple(x for x in pts if metric.d(x, x) != Ext(0))

    tri: list[tuple[Point, Point, Point]] = []
    lin: list[tuple[Point, Point, Point]] = []
    for x in pts:
        for y in pts:
            dxy = metric.d(x, y)
            for z in pts:
                lhs = metric.d(x, z)
                rhs = dxy + metric.d(y, z)
                if lhs > rhs:
                    tri.append((x, y, z))
                elif lhs < rhs and _between(x, y, z):
                    lin.append((x, y, z))

    proj: list[tuple[Point, Point, Point, Point]] = []
    for r in range(1, shape.dimension + 1):
        for x in pts:
            for y in pts:
                if x[r - 1] != y[r - 1]:
                    continue
                for c in range(1, shape.side(r) + 1):
                    if c == x[r - 1]:
                        continue
                    xp = x[: r - 1] + (c,) + x[r:]
                    yp = y[: r - 1] + (c,) + y[r:]
                    if metric.d(x, y) != metric.d(xp, yp) or metric.d(
                        x, xp
                    ) != metric.d(y, yp):
                        proj.append((x, y, xp, yp))

    return MetricAxiomReport(identity, tuple(tri), tuple(lin), tuple(proj))
