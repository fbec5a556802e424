"""Exact rational scalars extended with +/- infinity.

Derivative bounds may be infinite (an unconstrained side), so metric values
live in the extended rationals.  ``Ext`` wraps a ``fractions.Fraction`` or one
of the two infinities and supports exactly the arithmetic that metric
evaluation needs: negation, addition and subtraction where the infinities do
not collide, and a total order.  Everything is exact; no floats anywhere.

Adding +inf and -inf raises instead of producing a NaN-like value.  On a valid
bounding family that combination is unreachable (upper bounds are never -inf,
lower bounds never +inf), so reaching it means internal state is corrupt.
"""

from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Union

RatLike = Union[int, Fraction]

_ZERO = Fraction(0)


class Ext:
    """A Fraction, +infinity, or -infinity; immutable and hashable."""

    __slots__ = ("sign", "value")

    sign: int  # -1 for -inf, 0 for finite, +1 for +inf
    value: Fraction  # meaningful only when sign == 0

    def __init__(self, value: RatLike = 0, _sign: int = 0):
        object.__setattr__(self, "sign", _sign)
        object.__setattr__(
            self, "value", Fraction(value) if _sign == 0 else _ZERO
        )

    def __setattr__(self, name, val):  # pragma: no cover - immutability guard
        raise AttributeError("Ext is immutable")

    # -- construction -----------------------------------------------------

    @staticmethod
    def of(x: "ExtLike") -> "Ext":
        if isinstance(x, Ext):
            return x
        return Ext(x)

    @property
    def is_finite(self) -> bool:
        return self.sign == 0

    def as_fraction(self) -> Fraction:
        if self.sign != 0:
            raise ArithmeticError("infinite Ext has no Fraction value")
        return self.value

    # -- arithmetic --------------------------------------------------------

    def __neg__(self) -> "Ext":
        if self.sign != 0:
            return NEG_INF if self.sign > 0 else POS_INF
        return Ext(-self.value)

    def __add__(self, other: "ExtLike") -> "Ext":
        o = Ext.of(other)
        if self.sign == 0 and o.sign == 0:
            return Ext(self.value + o.value)
        if self.sign == 0:
            return o
        if o.sign == 0:
            return self
        if self.sign != o.sign:
            raise ArithmeticError("+inf + -inf is undefined")
        return self

    def __radd__(self, other: "ExtLike") -> "Ext":
        return self.__add__(other)

    def __sub__(self, other: "ExtLike") -> "Ext":
        return self.__add__(-Ext.of(other))

    def __rsub__(self, other: "ExtLike") -> "Ext":
        return Ext.of(other).__add__(-self)

    # -- order -------------------------------------------------------------

    def _cmp(self, other: "ExtLike") -> int:
        o = Ext.of(other)
        if self.sign != o.sign:
            return -1 if self.sign < o.sign else 1
        if self.sign != 0:
            return 0
        if self.value == o.value:
            return 0
        return -1 if self.value < o.value else 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, (Ext, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other: "ExtLike") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "ExtLike") -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: "ExtLike") -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: "ExtLike") -> bool:
        return self._cmp(other) >= 0

    def __hash__(self) -> int:
        if self.sign != 0:
            return hash(("Ext.inf", self.sign))
        return hash(self.value)

    def __repr__(self) -> str:
        if self.sign > 0:
            return "Ext(+inf)"
        if self.sign < 0:
            return "Ext(-inf)"
        return f"Ext({self.value})"

    def __str__(self) -> str:
        return format_ext(self)


POS_INF = Ext(0, _sign=1)
NEG_INF = Ext(0, _sign=-1)

ExtLike = Union[Ext, int, Fraction]


# -- text encoding ----------------------------------------------------------

def parse_fraction(text: str) -> Fraction:
    """Parse "p/q" or a bare integer string into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational literal: {text!r}") from exc


def format_fraction(x: RatLike) -> str:
    return str(Fraction(x))


def parse_ext(text: str) -> Ext:
    t = text.strip().lower()
    if t in ("inf", "+inf"):
        return POS_INF
    if t == "-inf":
        return NEG_INF
    return Ext(parse_fraction(text))


def format_ext(x: Ext) -> str:
    if x.sign > 0:
        return "inf"
    if x.sign < 0:
        return "-inf"
    return format_fraction(x.value)


# -- square-root bracketing --------------------------------------------------

def sqrt_bounds(x: Fraction) -> tuple[Fraction, Fraction]:
    """Exact rational lo <= sqrt(x) <= hi with hi - lo <= 1/denominator(x).

    Used to round confidence intervals outward without ever touching floats:
    sqrt(p/q) = sqrt(p*q)/q, and isqrt brackets sqrt(p*q) between consecutive
    integers.
    """
    if x < 0:
        raise ValueError("sqrt of a negative rational")
    p, q = x.numerator, x.denominator
    root = isqrt(p * q)
    lo = Fraction(root, q)
    if root * root == p * q:
        return lo, lo
    return lo, Fraction(root + 1, q)
