"""Experiment configs and report plumbing for the command-line harness.

An :class:`ExperimentConfig` pins down everything a run needs — grid shape,
product distribution, bounding family, function under test, epsilon, seed,
trial count, and brute-force caps — as exact data.  Rationals travel as
``"p/q"`` strings; floats never appear in configs or reports (the one
exception is the entropy diagnostic column in benchmark CSVs, which is
irrational by nature and clearly labelled).

The config is deliberately *unresolved*: distribution/family/function specs
are stored in a small normalized grammar and only instantiated on demand via
``resolve_*``.  That keeps the round-trip invariant trivial —
``ExperimentConfig.from_json(cfg.to_json()) == cfg`` — and makes configs
diffable.

Spec grammar
------------
distribution:
    ``"uniform"`` | ``"p-biased:P"`` | ``"zipf:S"`` | explicit marginal table
    (list of per-axis lists of ``"p/q"`` strings).  Zipf masses are
    proportional to ``k**-S``; each is truncated to a configured denominator
    bound and the result renormalized exactly, so the marginal stays rational
    even for fractional ``S``.
family:
    ``"monotone"`` | ``"lipschitz:C"`` | explicit per-axis
    ``{"lower": [...], "upper": [...]}`` tables using ``"inf"``/``"-inf"``
    for unbounded entries.
function:
    explicit value table (flat, ordered like ``HypergridShape.points``), or
    ``{"table": [...]}``, or ``{"generator": NAME, "seed": K, ...}``, or a
    hard-family reference ``{"hard": {"levels": {"1": 2, ...}}}`` built from
    the config's own distribution and epsilon.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from fractions import Fraction
from random import Random
from typing import Any, Mapping, Optional, Sequence

from .errors import DomainError
from .grid import GridFunction, HypergridShape, Point, ProductDistribution
from .hard import aggregate_hard_function, line_hard_family
from .metric import BoundingFamily
from .rational import Ext, format_ext, format_fraction, parse_ext, parse_fraction

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "zipf_marginal",
    "load_config",
    "dump_report",
    "report_envelope",
    "canonical_json",
]

#: Default denominator bound used when rationalizing zipf weights.
ZIPF_DENOMINATOR_BOUND = 10**6

#: Default point cap for exact brute-force distance work driven from configs.
DEFAULT_POINT_CAP = 4096


# ---------------------------------------------------------------------------
# zipf rationalization
# ---------------------------------------------------------------------------


def _floor_scaled_power(bound: int, k: int, s: Fraction) -> int:
    """Largest integer m with ``m * k**s <= bound``, computed exactly.

    Raising both sides to the ``q``-th power (``s = p/q``) turns the
    comparison into pure integers: ``m**q * k**p <= bound**q``.
    """
    if k == 1 or s == 0:
        return bound
    p, q = s.numerator, s.denominator
    rhs = bound**q
    kp = k**p
    lo, hi = 0, bound
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**q * kp <= rhs:
            lo = mid
        else:
            hi = mid - 1
    return lo


def zipf_marginal(n: int, s: Fraction, bound: int = ZIPF_DENOMINATOR_BOUND) -> tuple[Fraction, ...]:
    """Zipf(s) weights on {1..n}: truncate ``k**-s`` to ``1/bound`` steps, renormalize.

    Truncation happens *before* normalization so every intermediate is a
    rational with denominator at most ``bound``; the final division restores
    an exact probability vector.
    """
    if n < 1:
        raise DomainError("zipf marginal needs at least one value")
    if s < 0:
        raise DomainError("zipf exponent must be non-negative")
    if bound < 1:
        raise DomainError("zipf denominator bound must be positive")
    raw = [Fraction(_floor_scaled_power(bound, k, s), bound) for k in range(1, n + 1)]
    total = sum(raw)
    if total == 0:  # pragma: no cover - k=1 always contributes bound/bound
        raise DomainError("zipf weights truncated to zero; raise the denominator bound")
    return tuple(w / total for w in raw)


# ---------------------------------------------------------------------------
# spec normalization helpers
# ---------------------------------------------------------------------------


def _token_fraction(spec: str, fieldname: str) -> Fraction:
    """Parse the numeric part of a ``name:value`` spec token."""
    try:
        return parse_fraction(spec.split(":", 1)[1])
    except ValueError as exc:
        raise DomainError(f"field {fieldname!r}: {exc}") from exc


def _normalize_distribution_spec(spec: Any) -> Any:
    if isinstance(spec, str):
        if spec == "uniform":
            return "uniform"
        if spec.startswith("p-biased:"):
            p = _token_fraction(spec, "distribution")
            if not 0 <= p <= 1:
                raise DomainError("field 'distribution': bias must lie in [0, 1]")
            return f"p-biased:{format_fraction(p)}"
        if spec.startswith("zipf:"):
            s = _token_fraction(spec, "distribution")
            if s < 0:
                raise DomainError("field 'distribution': zipf exponent must be non-negative")
            return f"zipf:{format_fraction(s)}"
        raise DomainError(f"field 'distribution': unknown spec {spec!r}")
    if isinstance(spec, Sequence):
        out = []
        for axis in spec:
            if not isinstance(axis, Sequence) or isinstance(axis, str):
                raise DomainError("field 'distribution': explicit spec must be a list of per-axis lists")
            out.append(tuple(_as_fraction(v, "distribution") for v in axis))
        return tuple(out)
    raise DomainError("field 'distribution': expected a string or a marginal table")


def _normalize_family_spec(spec: Any) -> Any:
    if isinstance(spec, str):
        if spec == "monotone":
            return "monotone"
        if spec.startswith("lipschitz:"):
            c = _token_fraction(spec, "family")
            if c <= 0:
                raise DomainError("field 'family': Lipschitz constant must be positive")
            return f"lipschitz:{format_fraction(c)}"
        raise DomainError(f"field 'family': unknown spec {spec!r}")
    if isinstance(spec, Sequence):
        out = []
        for axis in spec:
            if not isinstance(axis, Mapping) or "lower" not in axis or "upper" not in axis:
                raise DomainError("field 'family': explicit spec needs per-axis lower/upper tables")
            lower = tuple(_as_ext(v, "family") for v in axis["lower"])
            upper = tuple(_as_ext(v, "family") for v in axis["upper"])
            out.append((lower, upper))
        return tuple(out)
    raise DomainError("field 'family': expected a string or per-axis bound tables")


_GENERATORS = ("random", "monotone", "member", "reverse")


def _normalize_function_spec(spec: Any) -> Any:
    if isinstance(spec, Sequence) and not isinstance(spec, str):
        return ("table", tuple(_as_fraction(v, "function") for v in spec))
    if isinstance(spec, Mapping):
        if "table" in spec:
            return ("table", tuple(_as_fraction(v, "function") for v in spec["table"]))
        if "generator" in spec:
            name = spec["generator"]
            if name not in _GENERATORS:
                raise DomainError(
                    f"field 'function': unknown generator {name!r}; expected one of {_GENERATORS}"
                )
            seed = int(spec.get("seed", 0))
            lo = int(spec.get("lo", 0))
            hi = int(spec.get("hi", 8))
            if hi < lo:
                raise DomainError("field 'function': generator needs lo <= hi")
            return ("generator", name, seed, lo, hi)
        if "hard" in spec:
            ref = spec["hard"]
            if not isinstance(ref, Mapping) or "levels" not in ref:
                raise DomainError("field 'function': hard reference needs a 'levels' map")
            levels = {}
            for axis, level in ref["levels"].items():
                levels[int(axis)] = int(level)
            if not levels:
                raise DomainError("field 'function': hard reference needs at least one level")
            return ("hard", tuple(sorted(levels.items())))
    raise DomainError("field 'function': expected a table, a generator spec, or a hard reference")


def _as_fraction(value: Any, fieldname: str) -> Fraction:
    if isinstance(value, bool):
        raise DomainError(f"field {fieldname!r}: booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return parse_fraction(value)
        except (DomainError, ValueError) as exc:
            raise DomainError(f"field {fieldname!r}: {exc}") from exc
    raise DomainError(f"field {fieldname!r}: expected an integer or a 'p/q' string, got {value!r}")


def _as_ext(value: Any, fieldname: str) -> Ext:
    if isinstance(value, str) and value.strip().lstrip("+-").lower() in {"inf", "infinity"}:
        return parse_ext(value)
    return Ext(_as_fraction(value, fieldname))


# ---------------------------------------------------------------------------
# the config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    """One benchmark row: an id, its own shape, and a distribution spec."""

    ident: str
    shape: tuple[int, ...]
    distribution: Any

    def to_json(self) -> dict:
        return {
            "id": self.ident,
            "shape": list(self.shape),
            "distribution": _emit_distribution(self.distribution),
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one harness invocation needs, as exact, diffable data."""

    shape: tuple[int, ...]
    distribution: Any = "uniform"
    family: Any = "monotone"
    function: Any = ("generator", "member", 0, 0, 8)
    epsilon: Fraction = Fraction(1, 5)
    seed: int = 0
    trials: int = 100
    caps: tuple[tuple[str, int], ...] = ()
    sweep: tuple[SweepRow, ...] = ()

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_json(data: Mapping[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise DomainError("config must be a JSON object")
        if "shape" not in data:
            raise DomainError("field 'shape': missing")
        shape_raw = data["shape"]
        if (
            not isinstance(shape_raw, Sequence)
            or isinstance(shape_raw, str)
            or not shape_raw
            or not all(isinstance(n, int) and not isinstance(n, bool) and n >= 1 for n in shape_raw)
        ):
            raise DomainError("field 'shape': expected a non-empty list of side lengths >= 1")
        shape = tuple(int(n) for n in shape_raw)

        epsilon = _as_fraction(data.get("epsilon", "1/5"), "epsilon")
        if not 0 < epsilon < 1:
            raise DomainError("field 'epsilon': must lie strictly between 0 and 1")

        seed = data.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise DomainError("field 'seed': expected a non-negative integer")
        trials = data.get("trials", 100)
        if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
            raise DomainError("field 'trials': expected a positive integer")

        caps_raw = data.get("caps", {})
        if not isinstance(caps_raw, Mapping):
            raise DomainError("field 'caps': expected an object of integer caps")
        caps = []
        for key, value in sorted(caps_raw.items()):
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise DomainError(f"field 'caps.{key}': expected a positive integer")
            caps.append((str(key), value))

        sweep_raw = data.get("sweep", [])
        if not isinstance(sweep_raw, Sequence) or isinstance(sweep_raw, str):
            raise DomainError("field 'sweep': expected a list of benchmark rows")
        sweep = []
        for i, row in enumerate(sweep_raw):
            if not isinstance(row, Mapping) or "id" not in row or "shape" not in row:
                raise DomainError(f"field 'sweep[{i}]': each row needs 'id' and 'shape'")
            row_shape = tuple(int(n) for n in row["shape"])
            if not row_shape or any(n < 1 for n in row_shape):
                raise DomainError(f"field 'sweep[{i}].shape': side lengths must be >= 1")
            sweep.append(
                SweepRow(
                    ident=str(row["id"]),
                    shape=row_shape,
                    distribution=_normalize_distribution_spec(row.get("distribution", "uniform")),
                )
            )

        return ExperimentConfig(
            shape=shape,
            distribution=_normalize_distribution_spec(data.get("distribution", "uniform")),
            family=_normalize_family_spec(data.get("family", "monotone")),
            function=_normalize_function_spec(data.get("function", {"generator": "member", "seed": 0})),
            epsilon=epsilon,
            seed=seed,
            trials=trials,
            caps=tuple(caps),
            sweep=tuple(sweep),
        )

    def to_json(self) -> dict:
        out: dict[str, Any] = {
            "shape": list(self.shape),
            "distribution": _emit_distribution(self.distribution),
            "family": _emit_family(self.family),
            "function": _emit_function(self.function),
            "epsilon": format_fraction(self.epsilon),
            "seed": self.seed,
            "trials": self.trials,
        }
        if self.caps:
            out["caps"] = {k: v for k, v in self.caps}
        if self.sweep:
            out["sweep"] = [row.to_json() for row in self.sweep]
        return out

    # -- resolution ----------------------------------------------------------

    @property
    def grid(self) -> HypergridShape:
        return HypergridShape(self.shape)

    def cap(self, name: str, default: int) -> int:
        for key, value in self.caps:
            if key == name:
                return value
        return default

    def resolve_distribution(self, shape: Optional[HypergridShape] = None, spec: Any = None) -> ProductDistribution:
        shape = shape if shape is not None else self.grid
        spec = spec if spec is not None else self.distribution
        bound = self.cap("zipf_denominator", ZIPF_DENOMINATOR_BOUND)
        return _build_distribution(shape, spec, bound)

    def resolve_family(self) -> BoundingFamily:
        return _build_family(self.grid, self.family)

    def resolve_function(self) -> GridFunction:
        shape = self.grid
        kind = self.function[0]
        if kind == "table":
            values = self.function[1]
            if len(values) != shape.size:
                raise DomainError(
                    f"field 'function': table has {len(values)} values, shape needs {shape.size}"
                )
            return GridFunction(shape, tuple(Fraction(v) for v in values))
        if kind == "generator":
            _, name, fseed, lo, hi = self.function
            return _generate_function(shape, self.resolve_family(), name, fseed, lo, hi)
        if kind == "hard":
            levels = dict(self.function[1])
            for axis in levels:
                if not 1 <= axis <= shape.dimension:
                    raise DomainError(f"field 'function': hard reference axis {axis} out of range")
            side = shape.side_lengths[0]
            if any(n != side for n in shape.side_lengths):
                raise DomainError("field 'function': hard references need a square grid")
            dist = self.resolve_distribution()
            families = [
                line_hard_family(dist.marginal(r), self.epsilon)
                for r in range(1, shape.dimension + 1)
            ]
            g, _ = aggregate_hard_function(levels, families, side)
            return g
        raise DomainError(f"unknown function spec kind {kind!r}")  # pragma: no cover


def load_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise DomainError(f"config file unreadable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DomainError(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_json(data)


# ---------------------------------------------------------------------------
# emitters / builders behind the config
# ---------------------------------------------------------------------------


def _emit_distribution(spec: Any) -> Any:
    if isinstance(spec, str):
        return spec
    return [[format_fraction(p) for p in axis] for axis in spec]


def _emit_family(spec: Any) -> Any:
    if isinstance(spec, str):
        return spec
    return [
        {
            "lower": [format_ext(v) for v in lower],
            "upper": [format_ext(v) for v in upper],
        }
        for lower, upper in spec
    ]


def _emit_function(spec: Any) -> Any:
    kind = spec[0]
    if kind == "table":
        return {"table": [format_fraction(v) for v in spec[1]]}
    if kind == "generator":
        _, name, seed, lo, hi = spec
        return {"generator": name, "seed": seed, "lo": lo, "hi": hi}
    if kind == "hard":
        return {"hard": {"levels": {str(axis): level for axis, level in spec[1]}}}
    raise DomainError(f"unknown function spec kind {kind!r}")  # pragma: no cover


def _build_distribution(shape: HypergridShape, spec: Any, zipf_bound: int) -> ProductDistribution:
    if isinstance(spec, str):
        if spec == "uniform":
            return ProductDistribution.uniform(shape)
        if spec.startswith("p-biased:"):
            if any(n != 2 for n in shape.side_lengths):
                raise DomainError("field 'distribution': p-biased needs a [2]^d shape")
            p = parse_fraction(spec.split(":", 1)[1])
            return ProductDistribution.p_biased(shape.dimension, p)
        if spec.startswith("zipf:"):
            s = parse_fraction(spec.split(":", 1)[1])
            return ProductDistribution.from_marginals(
                [list(zipf_marginal(n, s, zipf_bound)) for n in shape.side_lengths]
            )
        raise DomainError(f"field 'distribution': unknown spec {spec!r}")  # pragma: no cover
    marginals = [list(axis) for axis in spec]
    if len(marginals) != shape.dimension:
        raise DomainError(
            f"field 'distribution': {len(marginals)} marginals for a {shape.dimension}-axis shape"
        )
    for r, axis in enumerate(marginals, start=1):
        if len(axis) != shape.side_lengths[r - 1]:
            raise DomainError(
                f"field 'distribution': axis {r} has {len(axis)} masses, side length is "
                f"{shape.side_lengths[r - 1]}"
            )
    return ProductDistribution.from_marginals(marginals)


def _build_family(shape: HypergridShape, spec: Any) -> BoundingFamily:
    if isinstance(spec, str):
        if spec == "monotone":
            return BoundingFamily.monotone(shape)
        if spec.startswith("lipschitz:"):
            c = parse_fraction(spec.split(":", 1)[1])
            return BoundingFamily.lipschitz(shape, c)
        raise DomainError(f"field 'family': unknown spec {spec!r}")  # pragma: no cover
    if len(spec) != shape.dimension:
        raise DomainError(f"field 'family': {len(spec)} axes for a {shape.dimension}-axis shape")
    specs = []
    for r, (lo, up) in enumerate(spec, start=1):
        steps = shape.side_lengths[r - 1] - 1
        if len(lo) != steps or len(up) != steps:
            raise DomainError(f"field 'family': axis {r} needs {steps} step bounds")
        specs.append((tuple(lo), tuple(up)))
    return BoundingFamily.per_axis(shape, specs)


def _generate_function(
    shape: HypergridShape,
    family: BoundingFamily,
    name: str,
    seed: int,
    lo: int,
    hi: int,
) -> GridFunction:
    rng = Random(f"fn:{name}:{seed}")
    if name == "random":
        values = tuple(Fraction(rng.randint(lo, hi)) for _ in range(shape.size))
        return GridFunction(shape, values)
    if name == "reverse":
        # Anti-sorted along every axis: the canonical rejection fixture.
        def rev(x: Point) -> Fraction:
            return Fraction(sum(n - c for n, c in zip(shape.side_lengths, x)))

        return GridFunction.from_callable(shape, rev)
    if name == "monotone":
        # Lex order extends the coordinate order, so taking a running max
        # over already-assigned axis predecessors keeps the table monotone.
        table: dict[Point, Fraction] = {}
        for x in shape.points():
            base = Fraction(0)
            for r in range(1, shape.dimension + 1):
                if x[r - 1] > 1:
                    y = list(x)
                    y[r - 1] -= 1
                    base = max(base, table[tuple(y)])
            table[x] = base + Fraction(rng.randint(0, max(hi - lo, 1)))
        return GridFunction.from_callable(shape, lambda x: table[x])
    if name == "member":
        # A separable sum of per-axis walks whose steps respect the bounds is
        # always a member of the family.
        walks: list[list[Fraction]] = []
        for r in range(1, shape.dimension + 1):
            steps = []
            for low, up in zip(family.lower[r - 1], family.upper[r - 1]):
                if low.is_finite and up.is_finite:
                    span = up.value - low.value
                    steps.append(low.value + span * Fraction(rng.randint(0, 4), 4))
                elif low.is_finite:
                    steps.append(low.value + rng.randint(0, 2))
                elif up.is_finite:
                    steps.append(up.value - rng.randint(0, 2))
                else:
                    steps.append(Fraction(rng.randint(-2, 2)))
            walk = [Fraction(0)]
            for step in steps:
                walk.append(walk[-1] + step)
            walks.append(walk)

        def member(x: Point) -> Fraction:
            return sum((walks[r][x[r] - 1] for r in range(shape.dimension)), Fraction(0))

        return GridFunction.from_callable(shape, member)
    raise DomainError(f"unknown generator {name!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def report_envelope(command: str, config: Optional[ExperimentConfig], body: Mapping[str, Any]) -> dict:
    """Wrap a command's result in the standard report shape.

    ``generated_at`` is the only nondeterministic field; comparisons must
    exclude it.
    """
    out: dict[str, Any] = {
        "command": command,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    if config is not None:
        out["config"] = config.to_json()
    out.update(body)
    return out


def canonical_json(data: Any) -> str:
    """Stable serialization: sorted keys, no trailing whitespace games."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def dump_report(data: Any, path: Optional[str]) -> str:
    """Serialize ``data`` and write it to ``path`` (or return it for stdout)."""
    text = canonical_json(data)
    if path is not None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    return text
