"""Hypergrid domains, product distributions, and grid functions.

Conventions used throughout the package:

* The domain is the hypergrid ``[n_1] x ... x [n_d]`` with 1-indexed
  coordinates, so a point is a tuple ``x`` with ``1 <= x[r-1] <= n_r``.
* Probability masses are exact ``fractions.Fraction`` values.  A product
  distribution is given by one marginal per axis; zero-mass atoms are allowed.
* Function values are exact rationals as well.  Dense value tables are capped
  (default one million points) so that accidental giant allocations fail fast
  instead of thrashing.
"""

from __future__ import annotations

import itertools
import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Iterable, Iterator, Sequence

from .errors import DomainError, SizeCapError
from .rational import format_fraction, parse_fraction

Point = tuple[int, ...]

DENSE_POINT_CAP = 1_000_000

_WORD_MAX = 2**63 - 1


@dataclass(frozen=True)
class HypergridShape:
    """Side lengths of a hypergrid, with rank/unrank and iteration helpers."""

    side_lengths: tuple[int, ...]

    def __post_init__(self):
        if len(self.side_lengths) == 0:
            raise DomainError("a hypergrid needs at least one axis")
        if any(not isinstance(n, int) or n < 1 for n in self.side_lengths):
            raise DomainError(f"side lengths must be positive integers: {self.side_lengths}")
        size = 1
        for n in self.side_lengths:
            size *= n
            if size > _WORD_MAX:
                raise DomainError("hypergrid point count exceeds the word size")

    @property
    def dimension(self) -> int:
        return len(self.side_lengths)

    @property
    def size(self) -> int:
        return math.prod(self.side_lengths)

    def side(self, r: int) -> int:
        """Side length of axis ``r`` (1-indexed)."""
        self.check_axis(r)
        return self.side_lengths[r - 1]

    def check_axis(self, r: int) -> None:
        if not 1 <= r <= self.dimension:
            raise DomainError(f"axis {r} out of range 1..{self.dimension}")

    def contains(self, x: Point) -> bool:
        return len(x) == self.dimension and all(
            1 <= c <= n for c, n in zip(x, self.side_lengths)
        )

    def check_point(self, x: Point) -> None:
        if not self.contains(x):
            raise DomainError(f"point {x} outside grid {self.side_lengths}")

    def index(self, x: Point) -> int:
        """Row-major rank of a point (axis 1 slowest)."""
        self.check_point(x)
        idx = 0
        for c, n in zip(x, self.side_lengths):
            idx = idx * n + (c - 1)
        return idx

    def point_at(self, idx: int) -> Point:
        if not 0 <= idx < self.size:
            raise DomainError(f"rank {idx} out of range")
        coords = []
        for n in reversed(self.side_lengths):
            coords.append(idx % n + 1)
            idx //= n
        return tuple(reversed(coords))

    def points(self) -> Iterator[Point]:
        """All points in row-major order (axis 1 slowest)."""
        return itertools.product(*(range(1, n + 1) for n in self.side_lengths))

    def line_bases(self, r: int) -> Iterator[Point]:
        """One representative per axis-``r`` line (the point with x_r = 1)."""
        self.check_axis(r)
        ranges = [
            range(1, 2) if s == r else range(1, n + 1)
            for s, n in enumerate(self.side_lengths, start=1)
        ]
        return itertools.product(*ranges)

    def line_points(self, r: int, base: Point) -> Iterator[Point]:
        """The points of the axis-``r`` line through ``base``, in key order."""
        self.check_axis(r)
        self.check_point(base)
        for t in range(1, self.side(r) + 1):
            yield base[: r - 1] + (t,) + base[r:]

    def drop_axis(self, r: int) -> "HypergridShape":
        self.check_axis(r)
        if self.dimension == 1:
            raise DomainError("cannot drop the only axis")
        sides = self.side_lengths[: r - 1] + self.side_lengths[r:]
        return HypergridShape(sides)

    def to_json(self) -> list[int]:
        return list(self.side_lengths)

    @staticmethod
    def from_json(data: Sequence[int]) -> "HypergridShape":
        return HypergridShape(tuple(int(n) for n in data))


def dominates(y: Point, x: Point) -> bool:
    """Coordinate-wise x <= y (the natural partial order on the grid)."""
    return all(a <= b for a, b in zip(x, y))


def comparable(x: Point, y: Point) -> bool:
    return dominates(y, x) or dominates(x, y)


@dataclass(frozen=True)
class ProductDistribution:
    """A product distribution with exact rational marginals.

    Each marginal sums to exactly 1.  Sampling is exact: each coordinate draws
    a uniform integer below the marginal's common denominator and walks the
    cumulative numerator table, so the sampled law is the stated law, not a
    floating-point approximation.
    """

    shape: HypergridShape
    marginals: tuple[tuple[Fraction, ...], ...]
    # per-axis common denominator and cumulative numerator tables for sampling
    _denoms: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _cums: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.marginals) != self.shape.dimension:
            raise DomainError("need exactly one marginal per axis")
        denoms = []
        cums = []
        for r, (mu, n) in enumerate(
            zip(self.marginals, self.shape.side_lengths), start=1
        ):
            if len(mu) != n:
                raise DomainError(f"marginal {r} has {len(mu)} atoms, axis has {n}")
            if any(p < 0 for p in mu):
                raise DomainError(f"marginal {r} has a negative mass")
            if sum(mu, Fraction(0)) != 1:
                raise DomainError(f"marginal {r} does not sum to 1")
            den = lcm(*(p.denominator for p in mu)) if mu else 1
            acc, table = 0, []
            for p in mu:
                acc += p.numerator * (den // p.denominator)
                table.append(acc)
            denoms.append(den)
            cums.append(tuple(table))
        object.__setattr__(self, "_denoms", tuple(denoms))
        object.__setattr__(self, "_cums", tuple(cums))

    # -- constructors --------------------------------------------------------

    @staticmethod
    def uniform(shape: HypergridShape) -> "ProductDistribution":
        return ProductDistribution(
            shape,
            tuple(
                tuple(Fraction(1, n) for _ in range(n)) for n in shape.side_lengths
            ),
        )

    @staticmethod
    def from_marginals(
        marginals: Sequence[Sequence[Fraction]],
    ) -> "ProductDistribution":
        shape = HypergridShape(tuple(len(m) for m in marginals))
        return ProductDistribution(
            shape, tuple(tuple(Fraction(p) for p in m) for m in marginals)
        )

    @staticmethod
    def p_biased(d: int, p: Fraction) -> "ProductDistribution":
        """Hypercube marginals (1-p, p): coordinate value 2 has mass p."""
        if not 0 <= p <= 1:
            raise DomainError("bias must lie in [0, 1]")
        return ProductDistribution.from_marginals([[1 - p, p]] * d)

    # -- mass ----------------------------------------------------------------

    def marginal(self, r: int) -> tuple[Fraction, ...]:
        self.shape.check_axis(r)
        return self.marginals[r - 1]

    def point_mass(self, x: Point) -> Fraction:
        self.shape.check_point(x)
        m = Fraction(1)
        for c, mu in zip(x, self.marginals):
            m *= mu[c - 1]
            if m == 0:
                return m
        return m

    def mass(self, points: Iterable[Point]) -> Fraction:
        """Total mass of a set of points (duplicates are counted once)."""
        return sum((self.point_mass(x) for x in set(points)), Fraction(0))

    def line_mass(self, r: int, base: Point) -> Fraction:
        """Mass the complementary marginals assign to the axis-``r`` line."""
        self.shape.check_axis(r)
        self.shape.check_point(base)
        m = Fraction(1)
        for s, (c, mu) in enumerate(zip(base, self.marginals), start=1):
            if s != r:
                m *= mu[c - 1]
        return m

    def drop_axis(self, r: int) -> "ProductDistribution":
        self.shape.check_axis(r)
        return ProductDistribution(
            self.shape.drop_axis(r),
            self.marginals[: r - 1] + self.marginals[r:],
        )

    # -- sampling --------------------------------------------------------------

    def sample_axis(self, r: int, rng: random.Random) -> int:
        """Draw one key of axis ``r`` with exactly the marginal law."""
        self.shape.check_axis(r)
        den = self._denoms[r - 1]
        u = rng.randrange(den)
        return bisect_right(self._cums[r - 1], u) + 1

    def sample(self, rng: random.Random) -> Point:
        """Draw one grid point, one coordinate at a time, axis order 1..d."""
        return tuple(
            self.sample_axis(r, rng) for r in range(1, self.shape.dimension + 1)
        )

    # -- diagnostics ------------------------------------------------------------

    def axis_entropy(self, r: int) -> float:
        """Shannon entropy (bits) of marginal ``r``; diagnostic only, float."""
        return -sum(
            float(p) * math.log2(float(p)) for p in self.marginal(r) if p > 0
        )

    def entropy(self) -> float:
        return sum(self.axis_entropy(r) for r in range(1, self.shape.dimension + 1))

    # -- text encoding ------------------------------------------------------------

    def to_json(self) -> list[list[str]]:
        return [[format_fraction(p) for p in mu] for mu in self.marginals]

    @staticmethod
    def from_json(data: Sequence[Sequence[str]]) -> "ProductDistribution":
        return ProductDistribution.from_marginals(
            [[parse_fraction(s) for s in mu] for mu in data]
        )


def _nest_values(values: Sequence, shape: HypergridShape) -> list:
    """Row-major flat values -> nested lists, outermost index is axis 1."""
    if shape.dimension == 1:
        return list(values)
    head, rest = shape.side_lengths[0], shape.side_lengths[1:]
    inner = HypergridShape(rest)
    step = inner.size
    return [
        _nest_values(values[i * step : (i + 1) * step], inner) for i in range(head)
    ]


def _flatten_table(table, shape: HypergridShape) -> list[Fraction]:
    if shape.dimension == 1:
        if len(table) != shape.side_lengths[0]:
            raise DomainError("value table does not match the shape")
        return [Fraction(v) for v in table]
    if len(table) != shape.side_lengths[0]:
        raise DomainError("value table does not match the shape")
    inner = HypergridShape(shape.side_lengths[1:])
    out: list[Fraction] = []
    for sub in table:
        out.extend(_flatten_table(sub, inner))
    return out


@dataclass(frozen=True)
class GridFunction:
    """A total function from a hypergrid into the rationals, stored densely."""

    shape: HypergridShape
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if self.shape.size > DENSE_POINT_CAP:
            raise SizeCapError(
                f"grid has {self.shape.size} points, dense cap is {DENSE_POINT_CAP}"
            )
        if len(self.values) != self.shape.size:
            raise DomainError("value count does not match the shape")

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_table(table) -> "GridFunction":
        """Build from nested lists, outermost index axis 1; 1D takes a flat list."""
        shape_sides = []
        probe = table
        while isinstance(probe, (list, tuple)):
            shape_sides.append(len(probe))
            probe = probe[0]
        shape = HypergridShape(tuple(shape_sides))
        return GridFunction(shape, tuple(_flatten_table(table, shape)))

    @staticmethod
    def from_callable(
        shape: HypergridShape, fn: Callable[[Point], Fraction | int]
    ) -> "GridFunction":
        return GridFunction(shape, tuple(Fraction(fn(x)) for x in shape.points()))

    @staticmethod
    def constant(shape: HypergridShape, value: Fraction | int = 0) -> "GridFunction":
        return GridFunction(shape, (Fraction(value),) * shape.size)

    # -- access ----------------------------------------------------------------

    def __call__(self, x: Point) -> Fraction:
        return self.values[self.shape.index(x)]

    def value(self, x: Point) -> Fraction:
        return self.values[self.shape.index(x)]

    def table(self) -> list:
        return _nest_values(list(self.values), self.shape)

    # -- line and derivative views ------------------------------------------------

    def restrict_line(self, r: int, base: Point) -> "GridFunction":
        """The 1D restriction to the axis-``r`` line through ``base``."""
        vals = tuple(self.values[self.shape.index(x)] for x in self.shape.line_points(r, base))
        return GridFunction(HypergridShape((self.shape.side(r),)), vals)

    def partial_derivative(self, r: int, x: Point) -> Fraction:
        """f(x + e_r) - f(x); errors when x is on the axis-``r`` boundary."""
        self.shape.check_axis(r)
        self.shape.check_point(x)
        if x[r - 1] >= self.shape.side(r):
            raise DomainError(f"point {x} has no axis-{r} successor")
        succ = x[: r - 1] + (x[r - 1] + 1,) + x[r:]
        return self(succ) - self(x)

    # -- transforms ------------------------------------------------------------

    def pointwise_min(self, cap: Fraction) -> "GridFunction":
        return GridFunction(self.shape, tuple(min(v, cap) for v in self.values))

    # -- text encoding ------------------------------------------------------------

    def to_json(self) -> list:
        def render(node):
            if isinstance(node, list):
                return [render(v) for v in node]
            return format_fraction(node)

        return render(self.table())

    @staticmethod
    def from_json(data) -> "GridFunction":
        def parse(node):
            if isinstance(node, (list, tuple)):
                return [parse(v) for v in node]
            if isinstance(node, str):
                return parse_fraction(node)
            return Fraction(node)

        return GridFunction.from_table(parse(data))
