"""Randomized one-sided testers driven by binary search trees.

Every tester here follows the same shape: sample a key, walk its root
path in a fixed search tree, query the function along the path, and
reject exactly when two queried points violate the bound metric.  A
"reject" verdict therefore always carries a concrete violating pair,
and a function inside the family is accepted on every random seed.

Budgets are enforced without ever exceeding them: the cost of a step is
known from the sampled key alone (sampling is free), so a step that
would push the query counter past the cap is abandoned before any of
its queries run, and the run aborts with an accept.  A violation found
in a completed step always wins over a later abort.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, lcm
from typing import Callable, Optional, Sequence

from .bst import SearchTree, build_balanced_bst
from .errors import DomainError, SizeCapError
from .grid import GridFunction, Point, ProductDistribution
from .metric import ALL_PAIRS_POINT_CAP, AxisMetric, Quasimetric
from .rational import sqrt_bounds

ACCEPT = "accept"
REJECT = "reject"

SampleSource = Callable[[random.Random], Point]


@dataclass(frozen=True)
class StepTrace:
    """One executed step: what was sampled and which keys were walked."""

    point: Point
    axis: int
    path: tuple[int, ...]

    def queried_points(self) -> tuple[Point, ...]:
        """The grid points this step evaluated, in path order."""
        r = self.axis
        return tuple(
            self.point[: r - 1] + (k,) + self.point[r:] for k in self.path
        )


@dataclass(frozen=True)
class TestRun:
    verdict: str
    queries_used: int
    witness: Optional[tuple[Point, Point]]
    aborted: bool
    trace: tuple[StepTrace, ...]
    budget: Optional[int] = None
    steps: int = 1

    def __post_init__(self):
        assert self.verdict in (ACCEPT, REJECT)
        assert (self.verdict == REJECT) == (self.witness is not None)
        assert self.budget is None or self.queries_used <= self.budget

    def queried_points(self) -> list[Point]:
        """Multiset of evaluated points — a function of the random tape only."""
        out: list[Point] = []
        for step in self.trace:
            out.extend(step.queried_points())
        return out

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "queries": self.queries_used,
            "witness": [list(p) for p in self.witness] if self.witness else None,
            "aborted": self.aborted,
            "budget": self.budget,
            "steps": self.steps,
        }


# -- sampling helpers -----------------------------------------------------------


def _marginal_sampler(
    marginal: Sequence[Fraction],
) -> Callable[[random.Random], int]:
    """Exact sampler for a rational probability vector over keys 1..n."""
    mu = tuple(Fraction(p) for p in marginal)
    if not mu or any(p < 0 for p in mu) or sum(mu, Fraction(0)) != 1:
        raise DomainError("marginal must be a probability vector")
    den = lcm(*(p.denominator for p in mu))
    acc, cums = 0, []
    for p in mu:
        acc += p.numerator * (den // p.denominator)
        cums.append(acc)

    def draw(rng: random.Random) -> int:
        return bisect_right(cums, rng.randrange(den)) + 1

    return draw


def _check_epsilon(epsilon) -> Fraction:
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise DomainError("epsilon must lie in (0, 1]")
    return eps


def _violating_pair(
    keys: Sequence[int], vals: Sequence[Fraction], m: AxisMetric
) -> Optional[tuple[int, int]]:
    """First key pair among ``keys`` that breaks the 1D bound metric."""
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            a, b = keys[i], keys[j]
            gap = vals[i] - vals[j]
            dab = m.d(a, b)
            if dab.is_finite and gap > dab.value:
                return a, b
            dba = m.d(b, a)
            if dba.is_finite and -gap > dba.value:
                return a, b
    return None


# -- line tester ------------------------------------------------------------------


def _check_line_inputs(tree: SearchTree, f: GridFunction, q: Quasimetric) -> None:
    if f.shape.dimension != 1:
        raise DomainError("line tester needs a one-dimensional function")
    if q.shape != f.shape:
        raise DomainError("function and metric shapes disagree")
    if tree.n != f.shape.side(1):
        raise DomainError("tree size does not match the line")


def line_tester_step(
    tree: SearchTree,
    f: GridFunction,
    q: Quasimetric,
    marginal: Sequence[Fraction],
    rng: random.Random,
) -> TestRun:
    """One probe: sample a key, query its root path, reject on any violation.

    Sampling the root itself costs nothing and accepts outright; any
    other key v costs depth(v) + 1 point evaluations.
    """
    _check_line_inputs(tree, f, q)
    v = _marginal_sampler(marginal)(rng)
    if v == tree.root:
        step = StepTrace((v,), 1, ())
        return TestRun(ACCEPT, 0, None, False, (step,))
    path = tuple(tree.root_path(v))
    vals = [f((k,)) for k in path]
    hit = _violating_pair(path, vals, q.line_metric(1))
    step = StepTrace((v,), 1, path)
    if hit is None:
        return TestRun(ACCEPT, len(path), None, False, (step,))
    return TestRun(REJECT, len(path), ((hit[0],), (hit[1],)), False, (step,))


def line_tester(
    tree: SearchTree,
    f: GridFunction,
    q: Quasimetric,
    marginal: Sequence[Fraction],
    epsilon,
    rng: random.Random,
) -> TestRun:
    """Repeat the path probe ceil(2/eps) times under a hard query cap.

    The cap is ceil(24 * Delta / eps) where Delta is the tree's expected
    search depth under the sampling marginal.  Steps are atomic: a step
    whose path would overflow the cap is never queried and the run
    aborts (accepting), but a violation found earlier still rejects.
    """
    _check_line_inputs(tree, f, q)
    eps = _check_epsilon(epsilon)
    steps = ceil(Fraction(2) / eps)
    cap = int(ceil(24 * tree.expected_depth(marginal) / eps))
    draw = _marginal_sampler(marginal)
    metric = q.line_metric(1)

    total = 0
    witness: Optional[tuple[Point, Point]] = None
    aborted = False
    trace: list[StepTrace] = []
    for _ in range(steps):
        v = draw(rng)
        cost = 0 if v == tree.root else tree.depth[v] + 1
        if total + cost > cap:
            aborted = True
            break
        if cost == 0:
            trace.append(StepTrace((v,), 1, ()))
            continue
        path = tuple(tree.root_path(v))
        vals = [f((k,)) for k in path]
        total += cost
        trace.append(StepTrace((v,), 1, path))
        if witness is None:
            hit = _violating_pair(path, vals, metric)
            if hit is not None:
                witness = ((hit[0],), (hit[1],))
    verdict = REJECT if witness is not None else ACCEPT
    return TestRun(verdict, total, witness, aborted, tuple(trace), cap, len(trace))


# -- hypergrid tester ---------------------------------------------------------------


def _check_grid_inputs(
    trees: Sequence[SearchTree], f: GridFunction, q: Quasimetric
) -> None:
    if q.shape != f.shape:
        raise DomainError("function and metric shapes disagree")
    if len(trees) != f.shape.dimension:
        raise DomainError("need exactly one tree per axis")
    for r, tree in enumerate(trees, start=1):
        if tree.n != f.shape.side(r):
            raise DomainError(f"tree {r} does not match axis {r}")


def _grid_step(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    x: Point,
    r: int,
    v: int,
) -> tuple[StepTrace, int, Optional[tuple[Point, Point]]]:
    """Walk T_r's root path to v on the axis-r line through x."""
    tree = trees[r - 1]
    if v == tree.root:
        return StepTrace(x, r, ()), 0, None
    path = tuple(tree.root_path(v))
    pts = [x[: r - 1] + (k,) + x[r:] for k in path]
    vals = [f(p) for p in pts]
    hit = _violating_pair(path, vals, q.line_metric(r))
    witness = None
    if hit is not None:
        a, b = hit
        witness = (x[: r - 1] + (a,) + x[r:], x[: r - 1] + (b,) + x[r:])
    return StepTrace(x, r, path), len(path), witness


def hypergrid_tester_step(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    rng: random.Random,
) -> TestRun:
    """Sample a point and an axis, then run the line probe on that line.

    Tape order per step: the d coordinates of x, then the axis, then the
    fresh key drawn from the axis marginal.
    """
    _check_grid_inputs(trees, f, q)
    if dist.shape != f.shape:
        raise DomainError("distribution and function shapes disagree")
    x = dist.sample(rng)
    r = 1 + rng.randrange(f.shape.dimension)
    v = dist.sample_axis(r, rng)
    step, cost, witness = _grid_step(trees, f, q, x, r, v)
    verdict = REJECT if witness is not None else ACCEPT
    return TestRun(verdict, cost, witness, False, (step,))


def _run_grid(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    draw_xrv: Callable[[random.Random], tuple[Point, int, int]],
    steps: int,
    cap: int,
    rng: random.Random,
) -> TestRun:
    total = 0
    witness: Optional[tuple[Point, Point]] = None
    aborted = False
    trace: list[StepTrace] = []
    for _ in range(steps):
        x, r, v = draw_xrv(rng)
        tree = trees[r - 1]
        cost = 0 if v == tree.root else tree.depth[v] + 1
        if total + cost > cap:
            aborted = True
            break
        step, cost, hit = _grid_step(trees, f, q, x, r, v)
        total += cost
        trace.append(step)
        if witness is None and hit is not None:
            witness = hit
    verdict = REJECT if witness is not None else ACCEPT
    return TestRun(verdict, total, witness, aborted, tuple(trace), cap, len(trace))


def hypergrid_tester(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    epsilon,
    rng: random.Random,
) -> TestRun:
    """ceil(8d/eps) line probes, axis uniform, under one global query cap.

    The cap is ceil(100 * sum_r Delta(T_r) / eps); the step count makes
    (1 - p)^steps at most e^-2 whenever the per-step rejection
    probability p is at least eps/(4d).
    """
    _check_grid_inputs(trees, f, q)
    if dist.shape != f.shape:
        raise DomainError("distribution and function shapes disagree")
    eps = _check_epsilon(epsilon)
    d = f.shape.dimension
    steps = ceil(Fraction(8 * d) / eps)
    delta_sum = sum(
        (t.expected_depth(dist.marginal(r)) for r, t in enumerate(trees, start=1)),
        Fraction(0),
    )
    cap = int(ceil(100 * delta_sum / eps))

    def draw(rng: random.Random) -> tuple[Point, int, int]:
        x = dist.sample(rng)
        r = 1 + rng.randrange(d)
        return x, r, dist.sample_axis(r, rng)

    return _run_grid(trees, f, q, draw, steps, cap, rng)


def distribution_free_tester_step(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    sample_source: SampleSource,
    rng: random.Random,
) -> TestRun:
    """One probe against an unknown distribution reached only via samples.

    The probed key is the axis coordinate of a second, independent
    sample — exactly the marginal law of the hidden distribution.
    """
    _check_grid_inputs(trees, f, q)
    x = sample_source(rng)
    f.shape.check_point(x)
    r = 1 + rng.randrange(f.shape.dimension)
    y = sample_source(rng)
    f.shape.check_point(y)
    step, cost, witness = _grid_step(trees, f, q, x, r, y[r - 1])
    verdict = REJECT if witness is not None else ACCEPT
    return TestRun(verdict, cost, witness, False, (step,))


def distribution_free_tester(
    f: GridFunction,
    q: Quasimetric,
    sample_source: SampleSource,
    epsilon,
    rng: random.Random,
) -> TestRun:
    """The hypergrid tester with balanced trees and a log-sized cap.

    No distribution is given: points come from ``sample_source`` (called
    with the run's generator), and the cap is
    ceil(100 * sum_r ceil(log2 n_r) / eps) — the balanced trees bound
    every path by a log term, so no expected-depth knowledge is needed.
    """
    eps = _check_epsilon(epsilon)
    d = f.shape.dimension
    trees = [build_balanced_bst(f.shape.side(r)) for r in range(1, d + 1)]
    _check_grid_inputs(trees, f, q)
    steps = ceil(Fraction(8 * d) / eps)
    log_sum = sum((f.shape.side(r) - 1).bit_length() for r in range(1, d + 1))
    cap = int(ceil(Fraction(100 * log_sum) / eps))

    def draw(rng: random.Random) -> tuple[Point, int, int]:
        x = sample_source(rng)
        f.shape.check_point(x)
        r = 1 + rng.randrange(d)
        y = sample_source(rng)
        f.shape.check_point(y)
        return x, r, y[r - 1]

    return _run_grid(trees, f, q, draw, steps, cap, rng)


# -- exact rejection probabilities ---------------------------------------------------


def exact_rejection_prob_line(
    tree: SearchTree,
    f: GridFunction,
    q: Quasimetric,
    marginal: Sequence[Fraction],
) -> Fraction:
    """Exact per-step rejection probability of the line probe.

    This is the mass of the non-root keys whose root path contains a
    violating pair.  Keys violating with one of their own ancestors form
    a vertex cover of the violation graph, so this value is at least the
    distance of f from the family under the sampling marginal.
    """
    _check_line_inputs(tree, f, q)
    mu = tuple(Fraction(p) for p in marginal)
    if len(mu) != tree.n:
        raise DomainError("marginal size does not match the tree")
    metric = q.line_metric(1)
    total = Fraction(0)
    for v in range(1, tree.n + 1):
        if v == tree.root or mu[v - 1] == 0:
            continue
        path = tree.root_path(v)
        vals = [f((k,)) for k in path]
        if _violating_pair(path, vals, metric) is not None:
            total += mu[v - 1]
    return total


def exact_rejection_prob_grid(
    trees: Sequence[SearchTree],
    f: GridFunction,
    q: Quasimetric,
    dist: ProductDistribution,
    cap: int = ALL_PAIRS_POINT_CAP,
) -> Fraction:
    """Exact per-step rejection probability of the hypergrid probe.

    Averages the line value over the uniform axis choice and the line
    through the sampled point: (1/d) sum_r sum_lines mu(line) * p_line.
    """
    _check_grid_inputs(trees, f, q)
    if dist.shape != f.shape:
        raise DomainError("distribution and function shapes disagree")
    shape = f.shape
    if shape.size > cap:
        raise SizeCapError(
            f"exact grid rejection over {shape.size} points exceeds cap {cap}"
        )
    d = shape.dimension
    total = Fraction(0)
    for r in range(1, d + 1):
        tree = trees[r - 1]
        metric = q.line_metric(r)
        mu = dist.marginal(r)
        # root paths and their key pairs depend only on the tree
        paths = {
            v: tuple(tree.root_path(v))
            for v in range(1, tree.n + 1)
            if v != tree.root and mu[v - 1] > 0
        }
        for base in shape.line_bases(r):
            line_mu = dist.line_mass(r, base)
            if line_mu == 0:
                continue
            vals = [f(p) for p in shape.line_points(r, base)]
            for v, path in paths.items():
                pvals = [vals[k - 1] for k in path]
                if _violating_pair(path, pvals, metric) is not None:
                    total += line_mu * mu[v - 1]
    return total / d


def expected_line_step_queries(
    tree: SearchTree, marginal: Sequence[Fraction]
) -> Fraction:
    """Exact expected query count of one line probe: sum mu(v)(depth(v)+1)."""
    mu = tuple(Fraction(p) for p in marginal)
    if len(mu) != tree.n:
        raise DomainError("marginal size does not match the tree")
    return sum(
        (
            mu[v - 1] * (tree.depth[v] + 1)
            for v in range(1, tree.n + 1)
            if v != tree.root
        ),
        Fraction(0),
    )


def expected_grid_step_queries(
    trees: Sequence[SearchTree], dist: ProductDistribution
) -> Fraction:
    """Exact expected query count of one hypergrid probe (axis uniform)."""
    d = dist.shape.dimension
    if len(trees) != d:
        raise DomainError("need exactly one tree per axis")
    return (
        sum(
            (
                expected_line_step_queries(t, dist.marginal(r))
                for r, t in enumerate(trees, start=1)
            ),
            Fraction(0),
        )
        / d
    )


# -- Monte Carlo estimation -----------------------------------------------------------


_WILSON_Z = Fraction(49, 25)  # two-sided 95%


def _wilson_interval(rejects: int, trials: int) -> tuple[Fraction, Fraction]:
    z2 = _WILSON_Z * _WILSON_Z
    p = Fraction(rejects, trials)
    center = p + z2 / (2 * trials)
    denom = 1 + z2 / trials
    radicand = p * (1 - p) / trials + z2 / (4 * trials * trials)
    _, sqrt_hi = sqrt_bounds(radicand)
    lo = (center - _WILSON_Z * sqrt_hi) / denom
    hi = (center + _WILSON_Z * sqrt_hi) / denom
    return max(lo, Fraction(0)), min(hi, Fraction(1))


def estimate_rejection_prob(
    step: Callable[[random.Random], object],
    trials: int,
    seed,
) -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Monte Carlo rejection frequency with an exact 95% Wilson interval.

    Each trial runs on its own generator seeded from (seed, index), so
    the estimate is identical however the trials are scheduled.  The
    interval endpoints are rationals rounded outward, so the true
    frequency interval is always contained in the reported one.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    rejects = 0
    for i in range(trials):
        out = step(random.Random(f"{seed}:{i}"))
        hit = out.verdict == REJECT if isinstance(out, TestRun) else bool(out)
        rejects += 1 if hit else 0
    return Fraction(rejects, trials), _wilson_interval(rejects, trials)
