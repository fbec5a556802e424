"""Binary search trees over the key set [n]: median, optimal, balanced.

Expected depth is always with respect to edges (the root has depth 0), and
every key of [n] occupies a node whether or not it carries mass.  The three
builders are deterministic: the median rule takes the smallest key whose
prefix covers half the local interval mass, the optimal DP breaks ties toward
the smallest root key, and the balanced tree uses the floor midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DomainError
from .rational import format_fraction

Marginal = tuple[Fraction, ...]


def _check_marginal(marginal: Sequence[Fraction]) -> Marginal:
    mu = tuple(Fraction(p) for p in marginal)
    if not mu:
        raise DomainError("marginal must be nonempty")
    if any(p < 0 for p in mu):
        raise DomainError("marginal has a negative mass")
    if sum(mu) != 1:
        raise DomainError("marginal does not sum to 1")
    return mu


@dataclass(frozen=True)
class SearchTree:
    """A BST over keys 1..n with parent/child/depth arrays (index 0 unused).

    ``lo``/``hi`` give each key's subtree span: in a BST every subtree covers
    a contiguous key interval, which the hard-function constructions consume.
    """

    n: int
    root: int
    parent: tuple[int, ...]
    left: tuple[int, ...]
    right: tuple[int, ...]
    depth: tuple[int, ...]
    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        n = self.n
        if n < 1:
            raise DomainError("need at least one key")
        arrays = (self.parent, self.left, self.right, self.depth, self.lo, self.hi)
        if any(len(a) != n + 1 for a in arrays):
            raise DomainError("tree arrays must have length n + 1 (index 0 unused)")
        if not 1 <= self.root <= n or self.parent[self.root] != 0:
            raise DomainError("root key invalid")
        if self.depth[self.root] != 0:
            raise DomainError("root depth must be 0")
        seen = 0
        for v in range(1, n + 1):
            l, r, p = self.left[v], self.right[v], self.parent[v]
            if l and not (self.parent[l] == v and l < v):
                raise DomainError(f"left child of {v} violates BST structure")
            if r and not (self.parent[r] == v and r > v):
                raise DomainError(f"right child of {v} violates BST structure")
            if p:
                if self.depth[v] != self.depth[p] + 1:
                    raise DomainError(f"depth of {v} inconsistent with parent")
                if v not in (self.left[p], self.right[p]):
                    raise DomainError(f"{v} not a child of its parent")
            if not (self.lo[v] <= v <= self.hi[v]):
                raise DomainError(f"subtree span of {v} does not contain it")
            seen += 1
        if seen != n:
            raise DomainError("keys must be exactly 1..n")

    # -- queries ---------------------------------------------------------------

    def root_path(self, v: int) -> list[int]:
        """Keys from v up to the root, inclusive on both ends."""
        self._check_key(v)
        path = [v]
        while self.parent[path[-1]]:
            path.append(self.parent[path[-1]])
        return path

    def max_depth(self) -> int:
        return max(self.depth[1:])

    def keys_at_depth_at_least(self, j: int) -> list[int]:
        return [v for v in range(1, self.n + 1) if self.depth[v] >= j]

    def keys_at_depth(self, j: int) -> list[int]:
        return [v for v in range(1, self.n + 1) if self.depth[v] == j]

    def lca(self, x: int, y: int) -> int:
        """First key of the root's descent that lies inside [min, max]."""
        self._check_key(x)
        self._check_key(y)
        a, b = min(x, y), max(x, y)
        v = self.root
        while not a <= v <= b:
            v = self.left[v] if v > b else self.right[v]
        return v

    def lca_set(self, keys: Iterable[int]) -> set[int]:
        q = sorted(set(keys))
        if len(q) < 2:
            raise DomainError("lca_set needs at least two distinct keys")
        out = {self.lca(x, y) for i, x in enumerate(q) for y in q[i + 1 :]}
        assert len(out) <= len(q) - 1, "pairwise lca count exceeded |Q| - 1"
        return out

    def expected_depth(self, marginal: Sequence[Fraction]) -> Fraction:
        mu = _check_marginal(marginal)
        if len(mu) != self.n:
            raise DomainError("marginal size does not match the tree")
        return sum(
            (mu[v - 1] * self.depth[v] for v in range(1, self.n + 1)), Fraction(0)
        )

    def level_mass_profile(self, marginal: Sequence[Fraction]) -> tuple[Fraction, ...]:
        """beta_j = mass at depth >= j for j = 1..max_depth; nonincreasing,
        and its sum telescopes to the expected depth exactly."""
        mu = _check_marginal(marginal)
        if len(mu) != self.n:
            raise DomainError("marginal size does not match the tree")
        return tuple(
            sum(
                (mu[v - 1] for v in range(1, self.n + 1) if self.depth[v] >= j),
                Fraction(0),
            )
            for j in range(1, self.max_depth() + 1)
        )

    def subtree_mass(self, v: int, marginal: Sequence[Fraction]) -> Fraction:
        return sum(
            (Fraction(marginal[k - 1]) for k in range(self.lo[v], self.hi[v] + 1)),
            Fraction(0),
        )

    def dump(self, marginal: Sequence[Fraction] | None = None) -> str:
        """Parenthesized serialization with per-node depth (and mass if given)."""

        def render(v: int) -> str:
            if v == 0:
                return "."
            label = f"{v}@{self.depth[v]}"
            if marginal is not None:
                label += f":{format_fraction(marginal[v - 1])}"
            if self.left[v] == 0 and self.right[v] == 0:
                return label
            return f"({render(self.left[v])} {label} {render(self.right[v])})"

        return render(self.root)

    def _check_key(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise DomainError(f"key {v} out of range 1..{self.n}")


class _Builder:
    def __init__(self, n: int):
        self.parent = [0] * (n + 1)
        self.left = [0] * (n + 1)
        self.right = [0] * (n + 1)
        self.depth = [0] * (n + 1)
        self.lo = [0] * (n + 1)
        self.hi = [0] * (n + 1)

    def attach(self, v: int, parent: int, lo: int, hi: int) -> None:
        self.lo[v], self.hi[v] = lo, hi
        if parent:
            self.parent[v] = parent
            self.depth[v] = self.depth[parent] + 1
            if v < parent:
                self.left[parent] = v
            else:
                self.right[parent] = v

    def freeze(self, n: int, root: int) -> SearchTree:
        return SearchTree(
            n,
            root,
            tuple(self.parent),
            tuple(self.left),
            tuple(self.right),
            tuple(self.depth),
            tuple(self.lo),
            tuple(self.hi),
        )


def build_median_bst(marginal: Sequence[Fraction]) -> SearchTree:
    """Root at the smallest key covering half the local interval's mass."""
    mu = _check_marginal(marginal)
    n = len(mu)
    prefix = [Fraction(0)]
    for p in mu:
        prefix.append(prefix[-1] + p)

    b = _Builder(n)

    def build(lo: int, hi: int, parent: int) -> int:
        if lo > hi:
            return 0
        total = prefix[hi] - prefix[lo - 1]
        half = total / 2
        t = lo
        while t < hi and prefix[t] - prefix[lo - 1] < half:
            t += 1
        b.attach(t, parent, lo, hi)
        build(lo, t - 1, t)
        build(t + 1, hi, t)
        return t

    root = build(1, n, 0)
    tree = b.freeze(n, root)
    _assert_median_property(tree, mu)
    return tree


def _assert_median_property(tree: SearchTree, mu: Marginal) -> None:
    # mass(child subtree) + mass(parent) >= mass(sibling subtree), both ways
    for v in range(1, tree.n + 1):
        l, r = tree.left[v], tree.right[v]
        lm = tree.subtree_mass(l, mu) if l else Fraction(0)
        rm = tree.subtree_mass(r, mu) if r else Fraction(0)
        own = mu[v - 1]
        assert lm + own >= rm and rm + own >= lm, (
            f"median property fails at key {v}"
        )


def build_balanced_bst(n: int) -> SearchTree:
    """Midpoint-recursive tree; maximum depth is floor(log2 n)."""
    if n < 1:
        raise DomainError("need at least one key")
    b = _Builder(n)

    def build(lo: int, hi: int, parent: int) -> int:
        if lo > hi:
            return 0
        m = (lo + hi) // 2
        b.attach(m, parent, lo, hi)
        build(lo, m - 1, m)
        build(m + 1, hi, m)
        return m

    root = build(1, n, 0)
    tree = b.freeze(n, root)
    assert tree.max_depth() == n.bit_length() - 1
    return tree


def build_optimal_bst(marginal: Sequence[Fraction]) -> tuple[SearchTree, Fraction]:
    """Expected-depth-minimizing BST by interval DP.

    cost[i][j] is the minimum over trees on keys i..j of the sum of
    mu(v) * (1 + depth within the subtree), so the optimum expected depth is
    cost[1][n] minus the total mass.  The root search range is narrowed with
    the classic root-monotonicity bounds, keeping the table quadratic; the
    smallest optimal root is chosen, which is exactly what the monotonicity
    argument requires and makes the output deterministic.
    """
    mu = _check_marginal(marginal)
    n = len(mu)
    prefix = [Fraction(0)]
    for p in mu:
        prefix.append(prefix[-1] + p)

    def weight(i: int, j: int) -> Fraction:
        return prefix[j] - prefix[i - 1]

    # cost and chosen root for intervals [i, j]; empty intervals cost 0
    cost = [[Fraction(0)] * (n + 2) for _ in range(n + 2)]
    rootof = [[0] * (n + 2) for _ in range(n + 2)]
    for i in range(1, n + 1):
        cost[i][i] = mu[i - 1]
        rootof[i][i] = i
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            lo = rootof[i][j - 1]
            hi = rootof[i + 1][j]
            best = None
            best_root = 0
            for r in range(lo, hi + 1):
                c = cost[i][r - 1] + cost[r + 1][j]
                if best is None or c < best:
                    best, best_root = c, r
            cost[i][j] = best + weight(i, j)
            rootof[i][j] = best_root

    b = _Builder(n)

    def build(lo: int, hi: int, parent: int) -> int:
        if lo > hi:
            return 0
        r = rootof[lo][hi]
        b.attach(r, parent, lo, hi)
        build(lo, r - 1, r)
        build(r + 1, hi, r)
        return r

    root = build(1, n, 0)
    tree = b.freeze(n, root)
    delta_star = cost[1][n] - weight(1, n)
    assert tree.expected_depth(mu) == delta_star
    return tree, delta_star


def depth_report(marginals: Sequence[Sequence[Fraction]]) -> list[dict]:
    """Per-axis JSON-able summary of median depth, optimal depth, and entropy."""
    import math

    out = []
    for r, marginal in enumerate(marginals, start=1):
        mu = _check_marginal(marginal)
        median = build_median_bst(mu)
        _, delta_star = build_optimal_bst(mu)
        entropy = -sum(float(p) * math.log2(float(p)) for p in mu if p > 0)
        out.append(
            {
                "axis": r,
                "n": len(mu),
                "median_depth": format_fraction(median.expected_depth(mu)),
                "delta_star": format_fraction(delta_star),
                "entropy_bits": f"{entropy:.6f}",
            }
        )
    return out
