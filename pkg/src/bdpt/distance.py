"""Exact distances from a function to a bounded-derivative family.

The distance of f under a distribution D is the least mass one must
move to land inside the family.  Equivalently (complementation over the
violation graph): one minus the largest mass of a point set containing
no violating pair.  Everything here is exact rational arithmetic; the
general-grid computation is a branch-and-bound search and is therefore
capped at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

from .errors import DomainError, PreconditionError, SizeCapError, UnsupportedFamilyError
from .grid import GridFunction, HypergridShape, Point, ProductDistribution
from .metric import (
    ALL_PAIRS_POINT_CAP,
    Quasimetric,
    build_violation_graph,
    is_member,
    is_member_all_pairs,
    is_violation,
    violation_weight,
)
from .rational import Ext

BRUTE_FORCE_POINT_CAP = 22
MATCHING_POINT_CAP = 12


@dataclass(frozen=True)
class DistanceReport:
    """dist plus a constructive certificate: what to fix, and how."""

    dist: Fraction
    optimal_fix_set: frozenset[Point]
    witness_function: Optional[GridFunction] = None

    def to_json(self) -> dict:
        out = {
            "dist": f"{self.dist.numerator}/{self.dist.denominator}",
            "fix_set": sorted(list(p) for p in self.optimal_fix_set),
        }
        if self.witness_function is not None:
            out["witness"] = self.witness_function.to_json()
        return out


# -- constructive extension ---------------------------------------------------------


def _integrated_member(family) -> GridFunction:
    """Any member of the family: integrate one admissible step per axis."""
    steps = []
    for lo_vec, up_vec in zip(family.lower, family.upper):
        row = []
        for lo, up in zip(lo_vec, up_vec):
            if lo <= Ext(0) <= up:
                row.append(Fraction(0))
            elif lo > Ext(0):
                row.append(lo.value)  # lo is finite: it is never +inf
            else:
                row.append(up.value)  # up < 0 is finite: it is never -inf
        steps.append(row)
    shape = family.shape

    def g(x: Point) -> Fraction:
        return sum(
            (sum(steps[r][: x[r] - 1], Fraction(0)) for r in range(len(x))),
            Fraction(0),
        )

    out = GridFunction.from_callable(shape, g)
    assert is_member(out, family)
    return out


def closest_extension(f: GridFunction, q, keep: set[Point]) -> GridFunction:
    """Extend f from a violation-free point set to a full member function.

    Settled points are processed in grid order; each new value is pinned
    into the interval its settled neighbours force on it: at most
    min(g(s) + d(z,s)), at least max(g(s) - d(s,z)).  The interval is
    never empty: the triangle inequality bounds the spread of any
    violation-free assignment.  Membership is asserted on the result.
    """
    shape = f.shape
    pts = list(shape.points())
    kept = set(keep)
    for p in kept:
        shape.check_point(p)
    kept_list = sorted(kept)
    for i, x in enumerate(kept_list):
        for y in kept_list[i + 1 :]:
            if is_violation(f, q, x, y):
                raise PreconditionError(
                    f"keep set contains the violating pair {x}, {y}"
                )

    family = getattr(q, "family", None)
    if not kept:
        if family is not None:
            return _integrated_member(family)
        zero = GridFunction.constant(shape)
        if not is_member_all_pairs(zero, q):
            raise UnsupportedFamilyError(
                "empty keep set and no bounding family to integrate"
            )
        return zero

    values: dict[Point, Fraction] = {p: f(p) for p in kept}
    for z in pts:
        if z in values:
            continue
        upper = None  # min over settled s of g(s) + d(z, s)
        lower = None  # max over settled s of g(s) - d(s, z)
        for s, gs in values.items():
            dzs = q.d(z, s)
            if dzs.is_finite:
                cand = gs + dzs.value
                upper = cand if upper is None or cand < upper else upper
            dsz = q.d(s, z)
            if dsz.is_finite:
                cand = gs - dsz.value
                lower = cand if lower is None or cand > lower else lower
        if upper is not None:
            assert lower is None or lower <= upper
            values[z] = upper
        elif lower is not None:
            values[z] = lower
        else:
            values[z] = Fraction(0)

    out = GridFunction.from_callable(shape, lambda p: values[p])
    if family is not None:
        assert is_member(out, family)
    else:
        assert is_member_all_pairs(out, q)
    return out


# -- one-dimensional distance -------------------------------------------------------


def exact_distance_line(
    f: GridFunction, q, marginal: Sequence[Fraction], with_witness: bool = True
) -> DistanceReport:
    """Distance of a line function, by dynamic programming.

    Keeps a maximum-mass subset whose consecutive members are pairwise
    compatible with the bound metric; on a line the metric is additive
    along the axis, so consecutive compatibility telescopes to all
    pairs.  dist = 1 - kept mass; the witness re-fills the complement
    (skipped when ``with_witness`` is off — sweeps call this a lot).
    """
    if f.shape.dimension != 1:
        raise DomainError("line distance needs a one-dimensional function")
    n = f.shape.side(1)
    mu = tuple(Fraction(p) for p in marginal)
    if len(mu) != n:
        raise DomainError("marginal size does not match the line")
    vals = [f((i,)) for i in range(1, n + 1)]
    axis = q.line_metric(1) if isinstance(q, Quasimetric) else None

    def dkey(i: int, j: int) -> Ext:
        return axis.d(i, j) if axis is not None else q.d((i,), (j,))

    def compatible(i: int, j: int) -> bool:
        # 1-based keys i < j; both orientations of the pair constraint
        gap = Ext(vals[j - 1] - vals[i - 1])
        return gap <= dkey(j, i) and -gap <= dkey(i, j)

    best: list[Fraction] = [Fraction(0)] * (n + 1)
    prev: list[int] = [0] * (n + 1)
    for i in range(1, n + 1):
        best[i] = mu[i - 1]
        for j in range(1, i):
            if compatible(j, i) and best[j] + mu[i - 1] > best[i]:
                best[i] = best[j] + mu[i - 1]
                prev[i] = j
    top = max(range(1, n + 1), key=lambda i: (best[i], -i))
    kept: set[Point] = set()
    at = top
    while at:
        kept.add((at,))
        at = prev[at]
    # zero-mass keys extend the kept chain for free when compatible
    for i in range(1, n + 1):
        if (i,) not in kept and mu[i - 1] == 0:
            ks = [k for (k,) in kept]
            if all(compatible(*sorted((i, k))) for k in ks):
                kept.add((i,))
    dist = 1 - best[top]
    fix = frozenset(p for p in f.shape.points() if p not in kept)
    witness = closest_extension(f, q, kept) if with_witness else None
    assert 1 - sum((mu[p[0] - 1] for p in kept), Fraction(0)) == dist
    return DistanceReport(dist, fix, witness)


# -- general grids by branch and bound ----------------------------------------------


def max_independent_mass(
    points: Sequence[Point],
    edges: Sequence[tuple[Point, Point]],
    masses: Sequence[Fraction],
) -> tuple[Fraction, set[Point]]:
    """Heaviest subset of ``points`` spanning no edge (exact, exponential).

    Vertices are tried heaviest first; a branch dies when the incumbent
    already outweighs everything it could still collect.
    """
    m = len(points)
    if len(masses) != m:
        raise DomainError("one mass per point, please")
    den = lcm(*(w.denominator for w in masses)) if m else 1
    order = sorted(
        range(m), key=lambda i: (-(masses[i].numerator * (den // masses[i].denominator)), points[i])
    )
    w = [masses[order[k]].numerator * (den // masses[order[k]].denominator) for k in range(m)]
    pos = {points[order[k]]: k for k in range(m)}
    adj = [0] * m
    for x, y in edges:
        a, b = pos[x], pos[y]
        adj[a] |= 1 << b
        adj[b] |= 1 << a
    suffix = [0] * (m + 1)
    for k in range(m - 1, -1, -1):
        suffix[k] = suffix[k + 1] + w[k]

    best_mass = -1
    best_set = 0

    def walk(k: int, chosen: int, mass: int) -> None:
        nonlocal best_mass, best_set
        if mass + suffix[k] <= best_mass:
            return
        if k == m:
            best_mass, best_set = mass, chosen
            return
        if not adj[k] & chosen:
            walk(k + 1, chosen | (1 << k), mass + w[k])
        walk(k + 1, chosen, mass)

    walk(0, 0, 0)
    chosen_pts = {points[order[k]] for k in range(m) if best_set >> k & 1}
    return Fraction(best_mass, den), chosen_pts


def exact_distance_bruteforce(
    f: GridFunction,
    q,
    dist: ProductDistribution,
    cap: int = BRUTE_FORCE_POINT_CAP,
    with_witness: bool = True,
) -> DistanceReport:
    """Distance on a whole grid: max-mass independent set of the violation graph."""
    shape = f.shape
    if dist.shape != shape:
        raise DomainError("distribution and function shapes disagree")
    if shape.size > cap:
        raise SizeCapError(
            f"brute-force distance over {shape.size} points exceeds cap {cap}"
        )
    pts = list(shape.points())
    graph = build_violation_graph(f, q, cap=cap)
    masses = [dist.point_mass(p) for p in pts]
    kept_mass, kept = max_independent_mass(pts, graph.edges, masses)
    # grow the kept set with zero-mass points that conflict with nothing
    conflicts = {p: set() for p in pts}
    for x, y in graph.edges:
        conflicts[x].add(y)
        conflicts[y].add(x)
    for p in pts:
        if p not in kept and dist.point_mass(p) == 0 and not (conflicts[p] & kept):
            kept.add(p)
    d = 1 - kept_mass
    fix = frozenset(p for p in pts if p not in kept)
    witness = closest_extension(f, q, kept) if with_witness else None
    return DistanceReport(d, fix, witness)


# -- dimension reduction --------------------------------------------------------------


def directional_distance(
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    r: int,
    cap: int = ALL_PAIRS_POINT_CAP,
) -> Fraction:
    """Expected line distance along axis ``r``: E over r-lines of dist(f|line)."""
    shape = f.shape
    shape.check_axis(r)
    if dist.shape != shape:
        raise DomainError("distribution and function shapes disagree")
    if shape.size > cap:
        raise SizeCapError(
            f"directional distance over {shape.size} points exceeds cap {cap}"
        )
    line_q = q.line_quasimetric(r)
    mu = dist.marginal(r)
    total = Fraction(0)
    for base in shape.line_bases(r):
        weight = dist.line_mass(r, base)
        if weight == 0:
            continue
        report = exact_distance_line(
            f.restrict_line(r, base), line_q, mu, with_witness=False
        )
        total += weight * report.dist
    return total


@dataclass(frozen=True)
class DimensionReductionReport:
    dist: Fraction
    per_axis: tuple[Fraction, ...]
    lower_ok: bool
    upper_ok: bool

    @property
    def axis_sum(self) -> Fraction:
        return sum(self.per_axis, Fraction(0))

    def to_json(self) -> dict:
        return {
            "dist": f"{self.dist.numerator}/{self.dist.denominator}",
            "per_axis": [f"{v.numerator}/{v.denominator}" for v in self.per_axis],
            "axis_sum": f"{self.axis_sum.numerator}/{self.axis_sum.denominator}",
            "lower_ok": self.lower_ok,
            "upper_ok": self.upper_ok,
        }


def check_dimension_reduction(
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    cap: int = BRUTE_FORCE_POINT_CAP,
) -> DimensionReductionReport:
    """Compare the whole-grid distance against the per-axis line distances.

    The directional distances can only shrink (a global fix restricts to
    a fix on every line), but their sum recovers at least a quarter of
    the distance: dist/4 <= sum_r dist^r <= d * dist, checked exactly.
    """
    d = f.shape.dimension
    report = exact_distance_bruteforce(f, q, dist, cap=cap, with_witness=False)
    per_axis = tuple(
        directional_distance(f, q, dist, r, cap=max(cap, f.shape.size))
        for r in range(1, d + 1)
    )
    total = sum(per_axis, Fraction(0))
    return DimensionReductionReport(
        report.dist,
        per_axis,
        lower_ok=bool(4 * total >= report.dist),
        upper_ok=bool(total <= d * report.dist),
    )


# -- matching witness for r-good functions ---------------------------------------------


def is_axis_good(f: GridFunction, q: Quasimetric, r: int) -> bool:
    """No violating pair inside any axis-``r`` line."""
    shape = f.shape
    shape.check_axis(r)
    line_q = q.line_quasimetric(r)
    n = shape.side(r)
    for base in shape.line_bases(r):
        pts = list(shape.line_points(r, base))
        vals = [f(p) for p in pts]
        for i in range(n):
            for j in range(i + 1, n):
                gap = Ext(vals[j] - vals[i])
                if gap > line_q.d((j + 1,), (i + 1,)) or -gap > line_q.d(
                    (i + 1,), (j + 1,)
                ):
                    return False
    return True


def noviol_witness_check(
    f: GridFunction,
    q: Quasimetric,
    r: int,
    cap: int = MATCHING_POINT_CAP,
) -> bool:
    """Does some maximum-weight minimum-cardinality matching avoid axis ``r``?

    Enumerates every matching of the violation graph, finds the best
    (weight, then fewest edges), and reports whether that optimum is
    attained by a matching whose edges never change the r coordinate.
    Requires f to be r-good: lines along r must be violation-free.
    """
    shape = f.shape
    if shape.size > cap:
        raise SizeCapError(
            f"matching enumeration over {shape.size} points exceeds cap {cap}"
        )
    if not is_axis_good(f, q, r):
        raise PreconditionError(f"function has a violation within an axis-{r} line")
    graph = build_violation_graph(f, q, weighted=True, cap=cap)
    edges = list(graph.edges)
    weights = list(graph.weights or ())
    if not edges:
        return True
    cross = [x[r - 1] != y[r - 1] for x, y in edges]

    # one pass over all matchings, bucketing by weight
    by_weight: dict[Fraction, tuple[int, bool]] = {}

    def note(weight: Fraction, size: int, pure: bool) -> None:
        cur = by_weight.get(weight)
        if cur is None or size < cur[0]:
            by_weight[weight] = (size, pure)
        elif size == cur[0] and pure and not cur[1]:
            by_weight[weight] = (size, True)

    m = len(edges)

    def walk(i: int, used: set[Point], weight: Fraction, size: int, pure: bool):
        note(weight, size, pure)
        for j in range(i, m):
            x, y = edges[j]
            if x in used or y in used:
                continue
            walk(
                j + 1,
                used | {x, y},
                weight + weights[j],
                size + 1,
                pure and not cross[j],
            )

    walk(0, set(), Fraction(0), 0, True)
    best = max(by_weight)
    return by_weight[best][1]
