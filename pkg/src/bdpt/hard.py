"""Hard-instance constructions for the lower-bound laboratory.

Everything here manufactures functions that are provably far from a target
property while being hard to tell apart from a fixed reference function:

* per-level line functions built on the median search tree, one per tree
  level, each far from monotone in proportion to the mass below that level;
* an indicator-based family on the binary hypercube whose distance is exact
  and computable from a single product (the lighter side of every fiber);
* a projection squashing an arbitrary product distribution onto a two-point
  cube while preserving distances of pulled-back functions;
* "useful maps" that bundle one level per axis so the tail masses sum into a
  target window, built by a round-robin pass over per-axis level stacks;
* an aggregator combining the chosen line functions into one grid function
  via big-base positional coefficients;
* a transfer turning monotonicity instances into bounded-derivative
  instances with an identical violation graph;
* sampling-based truncation and capture diagnostics used by the
  distinguishing arguments.

All arithmetic is exact.  Functions emitted here feed the testers and the
distance oracles; nothing below depends on floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .bst import SearchTree, build_median_bst, build_optimal_bst
from .errors import DomainError, PreconditionError, UnsupportedFamilyError
from .grid import GridFunction, HypergridShape, Point, ProductDistribution
from .metric import (
    ALL_PAIRS_POINT_CAP,
    BoundingFamily,
    Quasimetric,
    build_violation_graph,
    monotone_metric,
)
from .rational import format_fraction

__all__ = [
    "LineLevel",
    "LineHardFamily",
    "line_hard_family",
    "level_truncation",
    "mass_concentration",
    "AxisStability",
    "StabilityReport",
    "stability_report",
    "HypercubeHardFamily",
    "hypercube_hard_family",
    "HypergridProjection",
    "project_to_hypercube",
    "UsefulMap",
    "median_level_profiles",
    "is_useful_map",
    "are_disjoint",
    "build_useful_maps",
    "aggregate_hard_function",
    "mono_to_bdp",
    "truncate_by_sampling",
    "captured_tuples",
]


def _as_marginal(marginal: Sequence[Fraction | int]) -> tuple[Fraction, ...]:
    mu = tuple(Fraction(p) for p in marginal)
    if not mu:
        raise DomainError("marginal must be non-empty")
    if any(p < 0 for p in mu) or sum(mu) != 1:
        raise DomainError("marginal must be non-negative and sum to 1")
    return mu


# -- per-level line functions --------------------------------------------------


@dataclass(frozen=True)
class LineLevel:
    """One level of the line construction.

    ``intervals`` holds triples (a, m, b): the subtree span [a, b] of a node
    one level up, split into the rising runs [a, m] and [m+1, b].  ``g`` is
    flat 2x outside the spans and shifted inside so that every left-run point
    beats every right-run point of the same span.
    """

    j: int
    intervals: tuple[tuple[int, int, int], ...]
    g: GridFunction
    beta: Fraction

    def to_json(self) -> dict:
        return {
            "level": self.j,
            "intervals": [list(t) for t in self.intervals],
            "beta": format_fraction(self.beta),
            "g": [format_fraction(v) for v in self.g.values],
        }


@dataclass(frozen=True)
class LineHardFamily:
    """The full ladder of line functions for one marginal."""

    marginal: tuple[Fraction, ...]
    epsilon: Fraction
    tree: SearchTree
    levels: tuple[LineLevel, ...]
    ell_eps: int

    @property
    def n(self) -> int:
        return self.tree.n

    def betas(self) -> tuple[Fraction, ...]:
        return tuple(level.beta for level in self.levels)

    def level(self, j: int) -> LineLevel:
        if not 1 <= j <= len(self.levels):
            raise DomainError(f"no level {j}; family has {len(self.levels)}")
        return self.levels[j - 1]

    def to_json(self) -> dict:
        return {
            "marginal": [format_fraction(p) for p in self.marginal],
            "epsilon": format_fraction(self.epsilon),
            "ell_eps": self.ell_eps,
            "levels": [level.to_json() for level in self.levels],
        }


def line_hard_family(
    marginal: Sequence[Fraction | int], epsilon: Fraction | int | str
) -> LineHardFamily:
    """Build the per-level functions over the median tree of ``marginal``.

    Level j takes the subtree spans of the depth-(j-1) nodes.  Each span
    [a, b] with node u splits at u or u-1, keeping the node on the lighter
    side so both halves carry at least half of the subtree's non-node mass.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError(f"epsilon must be in (0, 1/2), got {eps}")
    mu = _as_marginal(marginal)
    tree = build_median_bst(mu)
    n = tree.n

    prefix = [Fraction(0)] * (n + 1)
    for k in range(1, n + 1):
        prefix[k] = prefix[k - 1] + mu[k - 1]

    def span_mass(a: int, b: int) -> Fraction:
        return prefix[b] - prefix[a - 1] if a <= b else Fraction(0)

    betas = tree.level_mass_profile(mu)
    levels = []
    for j in range(1, tree.max_depth() + 1):
        intervals = []
        for u in sorted(tree.keys_at_depth(j - 1)):
            a, b = tree.lo[u], tree.hi[u]
            if span_mass(a, u - 1) <= span_mass(u + 1, b):
                m = u
            else:
                m = u - 1
            intervals.append((a, m, b))
        values = [Fraction(2 * x) for x in range(1, n + 1)]
        for a, m, b in intervals:
            for x in range(a, m + 1):
                values[x - 1] = Fraction(2 * x + 2 * (b - m) + 1)
            for x in range(m + 1, b + 1):
                values[x - 1] = Fraction(2 * x - 2 * (m - a) - 1)
        lowest = min(values)
        if lowest <= 0:  # cannot happen for 2x-based values; keeps the promise
            values = [v + 1 - lowest for v in values]
        levels.append(
            LineLevel(
                j=j,
                intervals=tuple(intervals),
                g=GridFunction.from_table(values),
                beta=betas[j - 1],
            )
        )

    ell = 0
    for j in range(len(levels), 0, -1):
        if levels[j - 1].beta >= 2 * eps:
            ell = j
            break
    return LineHardFamily(
        marginal=mu, epsilon=eps, tree=tree, levels=tuple(levels), ell_eps=ell
    )


# -- named perturbations and the stability report -------------------------------


def level_truncation(
    marginal: Sequence[Fraction], tree: SearchTree, ell: int
) -> tuple[Fraction, ...]:
    """Zero the mass at tree depth > ``ell``, rescaling the rest to sum 1."""
    mu = _as_marginal(marginal)
    deep = set(tree.keys_at_depth_at_least(ell + 1))
    nu = sum((mu[k - 1] for k in deep), Fraction(0))
    assert nu < 1, "the root always retains positive mass"
    return tuple(
        Fraction(0) if k in deep else mu[k - 1] / (1 - nu) for k in range(1, tree.n + 1)
    )


def mass_concentration(marginal: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Move all mass onto the heaviest key (smallest index on ties)."""
    mu = _as_marginal(marginal)
    top = max(range(len(mu)), key=lambda i: (mu[i], -i))
    return tuple(Fraction(1) if i == top else Fraction(0) for i in range(len(mu)))


def _tv_distance(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return sum((abs(a - b) for a, b in zip(p, q)), Fraction(0)) / 2


@dataclass(frozen=True)
class AxisStability:
    """How one axis's optimal search cost reacts to two named perturbations."""

    axis: int
    ell_eps: int
    delta_star: Fraction
    truncated: tuple[Fraction, ...]
    delta_star_truncated: Fraction
    tv_truncated: Fraction
    concentrated: tuple[Fraction, ...]
    delta_star_concentrated: Fraction
    tv_concentrated: Fraction

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "ell_eps": self.ell_eps,
            "delta_star": format_fraction(self.delta_star),
            "truncated": [format_fraction(p) for p in self.truncated],
            "delta_star_truncated": format_fraction(self.delta_star_truncated),
            "tv_truncated": format_fraction(self.tv_truncated),
            "concentrated": [format_fraction(p) for p in self.concentrated],
            "delta_star_concentrated": format_fraction(self.delta_star_concentrated),
            "tv_concentrated": format_fraction(self.tv_concentrated),
        }


@dataclass(frozen=True)
class StabilityReport:
    epsilon: Fraction
    axes: tuple[AxisStability, ...]

    @property
    def total_delta_star(self) -> Fraction:
        return sum((a.delta_star for a in self.axes), Fraction(0))

    @property
    def total_truncated(self) -> Fraction:
        return sum((a.delta_star_truncated for a in self.axes), Fraction(0))

    @property
    def total_concentrated(self) -> Fraction:
        return sum((a.delta_star_concentrated for a in self.axes), Fraction(0))

    def ratios(self) -> dict[str, Optional[Fraction]]:
        """Perturbed-to-original cost ratios; None when the original is zero."""
        base = self.total_delta_star
        if base == 0:
            return {"truncated": None, "concentrated": None}
        return {
            "truncated": self.total_truncated / base,
            "concentrated": self.total_concentrated / base,
        }

    def to_json(self) -> dict:
        ratios = self.ratios()
        return {
            "epsilon": format_fraction(self.epsilon),
            "axes": [a.to_json() for a in self.axes],
            "total_delta_star": format_fraction(self.total_delta_star),
            "total_truncated": format_fraction(self.total_truncated),
            "total_concentrated": format_fraction(self.total_concentrated),
            "ratios": {
                k: None if v is None else format_fraction(v) for k, v in ratios.items()
            },
        }


def stability_report(
    dist: ProductDistribution, epsilon: Fraction | int | str
) -> StabilityReport:
    """Report optimal search cost under the two named perturbations.

    Per axis: truncation at the family's top heavy level (mass below moved
    up proportionally) and full concentration onto the heaviest key.  The
    ratios estimate how brittle the search-cost lower bound is under small
    total-variation moves of the distribution.
    """
    eps = Fraction(epsilon)
    axes = []
    for r in range(1, dist.shape.dimension + 1):
        mu = dist.marginal(r)
        family = line_hard_family(mu, eps)
        _, base = build_optimal_bst(mu)
        truncated = level_truncation(mu, family.tree, family.ell_eps)
        _, after_trunc = build_optimal_bst(truncated)
        concentrated = mass_concentration(mu)
        _, after_conc = build_optimal_bst(concentrated)
        axes.append(
            AxisStability(
                axis=r,
                ell_eps=family.ell_eps,
                delta_star=base,
                truncated=truncated,
                delta_star_truncated=after_trunc,
                tv_truncated=_tv_distance(mu, truncated),
                concentrated=concentrated,
                delta_star_concentrated=after_conc,
                tv_concentrated=_tv_distance(mu, concentrated),
            )
        )
    return StabilityReport(epsilon=eps, axes=tuple(axes))


# -- hypercube family ------------------------------------------------------------


@dataclass(frozen=True)
class HypercubeHardFamily:
    """Indicator-segment functions on {1,2}^d.

    Axes are grouped (in ascending theta order) into segments whose theta
    masses sum into [1/2, 1).  chi_a fires when every axis of segment a sits
    at its high value 2; ``h`` stacks the indicators with powers of two, and
    ``gs[a-1]`` drops the a-th indicator's contribution just below its floor.
    """

    theta: tuple[Fraction, ...]
    segments: tuple[tuple[int, ...], ...]
    leftover: tuple[int, ...]
    h: GridFunction
    gs: tuple[GridFunction, ...]
    cube: ProductDistribution
    diagnostic: Optional[str] = None

    @property
    def b(self) -> int:
        return len(self.segments)

    @property
    def d(self) -> int:
        return len(self.theta)

    def chi(self, a: int, x: Point) -> int:
        if not 1 <= a <= self.b:
            raise DomainError(f"segment index {a} out of range 1..{self.b}")
        return 1 if all(x[i - 1] == 2 for i in self.segments[a - 1]) else 0

    def fiber_cover_value(self, a: int) -> Fraction:
        """Exact distance of gs[a-1]: the lighter side of each fiber.

        Within every assignment of the off-segment axes, the all-high point
        conflicts with the whole rest of the fiber, so a cover keeps the
        lighter of the two sides; both sides weigh the same in every fiber.
        """
        if not 1 <= a <= self.b:
            raise DomainError(f"segment index {a} out of range 1..{self.b}")
        p_high = Fraction(1)
        for i in self.segments[a - 1]:
            p_high *= 1 - self.theta[i - 1]
        return min(p_high, 1 - p_high)

    def to_json(self) -> dict:
        return {
            "theta": [format_fraction(t) for t in self.theta],
            "segments": [list(seg) for seg in self.segments],
            "leftover": list(self.leftover),
            "h": [format_fraction(v) for v in self.h.values],
            "gs": [[format_fraction(v) for v in g.values] for g in self.gs],
            "diagnostic": self.diagnostic,
        }


def hypercube_hard_family(theta: Sequence[Fraction | int | str]) -> HypercubeHardFamily:
    """Group axes by theta mass and emit the indicator-segment functions.

    ``theta[r-1]`` is the smaller point mass of axis r's two-point marginal;
    the family's own cube distribution puts theta on the low value 1.  If no
    segment reaches total mass 1/2, the family is empty (b = 0) and carries a
    diagnostic: with so little off-high mass a constant-query tester suffices.
    """
    th = tuple(Fraction(t) for t in theta)
    if not th:
        raise DomainError("need at least one axis")
    if any(not 0 <= t <= Fraction(1, 2) for t in th):
        raise DomainError("theta entries must lie in [0, 1/2]")
    d = len(th)
    order = sorted(range(1, d + 1), key=lambda r: (th[r - 1], r))

    segments: list[tuple[int, ...]] = []
    current: list[int] = []
    running = Fraction(0)
    for r in order:
        current.append(r)
        running += th[r - 1]
        if running >= Fraction(1, 2):
            segments.append(tuple(current))
            current = []
            running = Fraction(0)
    leftover = tuple(current)

    shape = HypergridShape((2,) * d)
    b = len(segments)

    def h_value(x: Point) -> int:
        total = 0
        for a, seg in enumerate(segments, start=1):
            if all(x[i - 1] == 2 for i in seg):
                total += 2**a
        return total

    h = GridFunction.from_callable(shape, h_value)

    gs = []
    for a, seg in enumerate(segments, start=1):
        drop = 2**a + 1
        raw = [
            h.values[idx] - (drop if all(x[i - 1] == 2 for i in seg) else 0)
            for idx, x in enumerate(shape.points())
        ]
        lowest = min(raw)
        offset = -lowest if lowest < 0 else Fraction(0)
        gs.append(GridFunction(shape, tuple(v + offset for v in raw)))

    cube = ProductDistribution.from_marginals([(t, 1 - t) for t in th])
    diagnostic = None
    if b == 0:
        total = sum(th, Fraction(0))
        diagnostic = (
            f"total theta mass {format_fraction(total)} never reaches 1/2: "
            "no segment completes and the query lower bound degenerates to a constant"
        )
    return HypercubeHardFamily(
        theta=th,
        segments=tuple(segments),
        leftover=leftover,
        h=h,
        gs=tuple(gs),
        cube=cube,
        diagnostic=diagnostic,
    )


# -- projection onto the cube ----------------------------------------------------


@dataclass(frozen=True)
class HypergridProjection:
    """Axis-wise threshold map from [n_1] x ... x [n_d] onto {1,2}^d."""

    source: ProductDistribution
    thresholds: tuple[int, ...]
    theta: tuple[Fraction, ...]
    cube: ProductDistribution

    def map_point(self, x: Point) -> Point:
        self.source.shape.check_point(x)
        return tuple(
            1 if x[r] <= self.thresholds[r] else 2 for r in range(len(self.thresholds))
        )

    def pullback(self, g: GridFunction) -> GridFunction:
        """Compose a cube function with the projection."""
        if g.shape.side_lengths != (2,) * self.source.shape.dimension:
            raise DomainError("pullback needs a function on the matching cube")
        return GridFunction.from_callable(
            self.source.shape, lambda x: g(self.map_point(x))
        )

    def to_json(self) -> dict:
        return {
            "thresholds": list(self.thresholds),
            "theta": [format_fraction(t) for t in self.theta],
            "cube": self.cube.to_json(),
        }


def project_to_hypercube(dist: ProductDistribution) -> HypergridProjection:
    """Pick, per axis, the prefix split that balances mass best.

    The threshold j maximizes min(P_j, 1 - P_j) over prefixes P_j; the
    smallest maximizer wins ties.  Low cube value 1 collects the prefix
    mass.  Pulling a cube function back through the map preserves its
    distance to monotonicity.
    """
    thresholds = []
    thetas = []
    cube_marginals = []
    for r in range(1, dist.shape.dimension + 1):
        mu = dist.marginal(r)
        n = len(mu)
        best_j, best_theta, best_prefix = 1, Fraction(0), Fraction(1)
        if n == 1:
            pass  # single key: everything maps to the low value
        else:
            prefix = Fraction(0)
            best_prefix = None
            for j in range(1, n):
                prefix += mu[j - 1]
                candidate = min(prefix, 1 - prefix)
                if best_prefix is None or candidate > best_theta:
                    best_j, best_theta, best_prefix = j, candidate, prefix
        thresholds.append(best_j)
        thetas.append(best_theta)
        cube_marginals.append((best_prefix, 1 - best_prefix))
    return HypergridProjection(
        source=dist,
        thresholds=tuple(thresholds),
        theta=tuple(thetas),
        cube=ProductDistribution.from_marginals(cube_marginals),
    )


# -- useful maps -----------------------------------------------------------------


@dataclass(frozen=True)
class UsefulMap:
    """A choice of at most one tree level per axis with tail masses in a window.

    ``psi[r-1]`` is the chosen level on axis r (None for axes left out),
    ``masses[r-1]`` the mass at that level's depth or deeper.  The map is
    worth aggregating when the masses total in (eps_prime, 1] and no chosen
    level loses more than half the mass of the level above it.
    """

    psi: tuple[Optional[int], ...]
    masses: tuple[Fraction, ...]
    eps_prime: Fraction

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(r for r, j in enumerate(self.psi, start=1) if j is not None)

    @property
    def total(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    def level(self, r: int) -> Optional[int]:
        return self.psi[r - 1]

    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((r, self.psi[r - 1]) for r in self.support)

    def to_json(self) -> dict:
        return {
            "psi": {str(r): self.psi[r - 1] for r in self.support},
            "masses": {str(r): format_fraction(self.masses[r - 1]) for r in self.support},
            "total": format_fraction(self.total),
            "eps_prime": format_fraction(self.eps_prime),
        }


def median_level_profiles(dist: ProductDistribution) -> list[list[Fraction]]:
    """Per axis, the mass at depth >= j of the median tree, for j = 1, 2, ..."""
    profiles = []
    for r in range(1, dist.shape.dimension + 1):
        mu = dist.marginal(r)
        tree = build_median_bst(mu)
        profiles.append(tree.level_mass_profile(mu))
    return profiles


def is_useful_map(m: UsefulMap, profiles: Sequence[Sequence[Fraction]]) -> bool:
    """Check the window and half-mass conditions against the level profiles."""
    if len(m.psi) != len(profiles):
        return False
    total = Fraction(0)
    for r, j in enumerate(m.psi, start=1):
        if j is None:
            if m.masses[r - 1] != 0:
                return False
            continue
        profile = profiles[r - 1]
        if j < 2 or j > len(profile):
            return False
        if m.masses[r - 1] != profile[j - 1]:
            return False
        if profile[j - 1] < profile[j - 2] / 2:
            return False
        total += profile[j - 1]
    return m.eps_prime < total <= 1


def are_disjoint(maps: Sequence[UsefulMap]) -> bool:
    """No (axis, level) pair may appear in two maps of a batch."""
    seen: set[tuple[int, int]] = set()
    for m in maps:
        pairs = m.pairs()
        if seen & pairs:
            return False
        seen |= pairs
    return True


def build_useful_maps(
    dist: ProductDistribution,
    epsilon: Fraction | int | str,
    const_factor: int = 110,
) -> list[UsefulMap]:
    """Round-robin the per-axis level stacks into disjoint useful maps.

    Each axis contributes its eligible levels (level j > 1 keeping at least
    half the mass of level j-1) in increasing order.  A round visits the
    axes once, popping one level each, until the running mass enters the
    window (eps_prime, 1]; a pop that would push the mass past 1 scraps the
    partial map and seeds a fresh one in the same round.  The procedure
    stops when even taking every current stack head cannot reach the window,
    discarding whatever partial map is in flight.
    """
    eps = Fraction(epsilon)
    if not 0 < eps < Fraction(1, 10):
        raise PreconditionError(f"epsilon must be in (0, 1/10), got {eps}")
    eps_prime = const_factor * eps
    if eps_prime > 1:
        raise PreconditionError(
            f"const_factor * epsilon = {eps_prime} exceeds 1; the window is empty"
        )

    profiles = median_level_profiles(dist)
    d = len(profiles)
    stacks: list[list[int]] = []
    for profile in profiles:
        allowed = [
            j
            for j in range(2, len(profile) + 1)
            if profile[j - 1] >= profile[j - 2] / 2
        ]
        stacks.append(allowed[::-1])  # pop() yields increasing levels

    maps: list[UsefulMap] = []
    while True:
        heads = (
            sum((profiles[r][stack[-1] - 1] for r, stack in enumerate(stacks) if stack),
                Fraction(0))
        )
        if not any(stacks) or heads < eps_prime:
            break
        current: dict[int, int] = {}
        count = Fraction(0)
        for r in range(1, d + 1):
            if not stacks[r - 1]:
                continue
            j = stacks[r - 1][-1]
            beta = profiles[r - 1][j - 1]
            if count + beta > 1:
                current = {}
                count = Fraction(0)
            stacks[r - 1].pop()
            current[r] = j
            count += beta
            if eps_prime < count <= 1:
                m = UsefulMap(
                    psi=tuple(current.get(rr) for rr in range(1, d + 1)),
                    masses=tuple(
                        profiles[rr - 1][current[rr] - 1] if rr in current else Fraction(0)
                        for rr in range(1, d + 1)
                    ),
                    eps_prime=eps_prime,
                )
                assert is_useful_map(m, profiles)
                maps.append(m)
                break
        # an exhausted round leaves its partial map behind

    assert are_disjoint(maps)
    return maps


# -- aggregation -----------------------------------------------------------------


def aggregate_hard_function(
    mapping: UsefulMap | Mapping[int, int],
    families: Sequence[LineHardFamily],
    n: int,
) -> tuple[GridFunction, GridFunction]:
    """Combine chosen per-axis line functions into one function on [n]^d.

    Returns (g, val): axis r contributes (2n+1)^r times its chosen level
    function, or 2(2n+1)^r x_r when left out; ``val`` is the all-left-out
    reference, which is strictly monotone.  The base 2n+1 exceeds any value
    a level function can take, so no cross-axis carry can mask a violation.
    """
    d = len(families)
    if d == 0:
        raise DomainError("need at least one axis family")
    for family in families:
        if family.n != n:
            raise DomainError(f"family on [{family.n}] does not match n={n}")
    if isinstance(mapping, UsefulMap):
        chosen = {r: mapping.level(r) for r in mapping.support}
    else:
        chosen = dict(mapping)
    for r, j in chosen.items():
        if not 1 <= r <= d:
            raise DomainError(f"axis {r} out of range 1..{d}")
        families[r - 1].level(j)  # raises if the level does not exist

    shape = HypergridShape((n,) * d)
    coeff = [(2 * n + 1) ** r for r in range(1, d + 1)]

    def g_value(x: Point) -> Fraction:
        total = Fraction(0)
        for r in range(1, d + 1):
            if r in chosen:
                total += coeff[r - 1] * families[r - 1].level(chosen[r]).g((x[r - 1],))
            else:
                total += 2 * coeff[r - 1] * x[r - 1]
        return total

    def val_value(x: Point) -> Fraction:
        return sum(
            (2 * coeff[r - 1] * x[r - 1] for r in range(1, d + 1)), Fraction(0)
        )

    return (
        GridFunction.from_callable(shape, g_value),
        GridFunction.from_callable(shape, val_value),
    )


# -- monotonicity to bounded-derivative transfer ----------------------------------


def mono_to_bdp(f: GridFunction, family: BoundingFamily) -> GridFunction:
    """Rescale and shear ``f`` so its monotonicity violations become exactly
    the bounded-derivative violations under ``family``.

    g(x) = (delta / 2R) f(x) - d(1bar, x), where 1bar is the least grid
    point, R the largest f value, and delta the cheapest round-trip slack of
    the family's metric.  Requires every f value >= 1 and every d(1bar, x)
    finite (no -inf lower bound on a step the grid uses).
    """
    if f.shape != family.shape:
        raise DomainError("function and family live on different grids")
    if min(f.values) < 1:
        raise DomainError("values must be at least 1")
    big_r = max(f.values)
    q = Quasimetric(family)
    zero = (1,) * f.shape.dimension

    d0 = {}
    for x in f.shape.points():
        v = q.d(zero, x)
        if not v.is_finite:
            raise UnsupportedFamilyError(
                f"d(1bar, {x}) is infinite; the transfer needs finite lower-bound sums"
            )
        d0[x] = v.as_fraction()

    # The minimum slack over pairs that descend somewhere collapses to the
    # cheapest single step: every such pair's slack is a sum of per-step gaps
    # u - l, each positive, and an adjacent pair realizes any single gap.
    delta = None
    for r in range(1, f.shape.dimension + 1):
        for lo, up in zip(family.lower[r - 1], family.upper[r - 1]):
            if lo.is_finite and up.is_finite:
                gap = up.as_fraction() - lo.as_fraction()
                if delta is None or gap < delta:
                    delta = gap
    if delta is None:
        delta = Fraction(1)  # all slacks infinite: any positive scale works
    assert delta > 0

    scale = delta / (2 * big_r)
    g = GridFunction.from_callable(f.shape, lambda x: scale * f(x) - d0[x])

    if f.shape.size <= ALL_PAIRS_POINT_CAP:
        mono_edges = build_violation_graph(f, monotone_metric(f.shape)).edges
        bdp_edges = build_violation_graph(g, q).edges
        assert mono_edges == bdp_edges, "transfer must preserve the violation graph"
    return g


# -- truncation by sampling --------------------------------------------------------


def truncate_by_sampling(
    f: GridFunction,
    dist: ProductDistribution,
    epsilon: Fraction | int | str,
    rng,
) -> GridFunction:
    """Cap ``f`` at the largest value seen on ceil(10/eps) sampled points.

    Monotone functions stay monotone, and the capped function agrees with f
    outside a set whose mass is below eps with probability at least
    1 - (1 - eps)^(10/eps).
    """
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise PreconditionError(f"epsilon must be in (0, 1], got {eps}")
    if f.shape != dist.shape:
        raise DomainError("function and distribution live on different grids")
    draws = math.ceil(10 / eps)
    cap = max(f(dist.sample(rng)) for _ in range(draws))
    return f.pointwise_min(cap)


# -- capture diagnostics -----------------------------------------------------------


def captured_tuples(
    points: Iterable[Point], trees: Sequence[SearchTree]
) -> set[tuple[int, int]]:
    """The (axis, level) pairs a query set pins down.

    A pair of points captures the largest axis where they differ, at one
    level below the meeting depth of their coordinates in that axis's tree.
    A set of q points can never capture more than q - 1 pairs.
    """
    pts = sorted(set(points))
    if len(pts) < 2:
        raise PreconditionError("need at least two distinct points")
    d = len(trees)
    for x in pts:
        if len(x) != d:
            raise DomainError(f"point {x} does not match {d} trees")
    out: set[tuple[int, int]] = set()
    for i in range(len(pts)):
        for k in range(i + 1, len(pts)):
            x, y = pts[i], pts[k]
            r = max(axis for axis in range(1, d + 1) if x[axis - 1] != y[axis - 1])
            tree = trees[r - 1]
            j = tree.depth[tree.lca(x[r - 1], y[r - 1])] + 1
            out.add((r, j))
    assert len(out) <= len(pts) - 1
    return out
