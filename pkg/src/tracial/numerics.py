"""Exact dyadic rationals and dyadic intervals.

Every certified quantity in the package is reported as a
:class:`DyadicInterval`.  Floating point is used for the heavy numerical
work; values cross into dyadic form through :func:`interval_hull`, which
rounds outward and adds an explicit slack.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real
from typing import Iterable, Union

__all__ = [
    "Dyadic",
    "DyadicInterval",
    "monus",
    "interval_hull",
    "slack_budget",
    "DEFAULT_PRECISION",
    "SLACK_PER_OP",
]

#: bits used when rounding non-dyadic reals outward
DEFAULT_PRECISION = 40

#: slack charged per formula operation when a float result is certified
SLACK_PER_OP = 2.0 ** -20

_DYADIC_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*2\s*\^\s*(\d+))?\s*$")


@dataclass(frozen=True, order=False)
class Dyadic:
    """The rational ``mantissa / 2**exponent`` in canonical form.

    The mantissa is odd whenever the exponent is positive; zero is
    ``Dyadic(0, 0)``.  Arithmetic is exact.
    """

    mantissa: int
    exponent: int = 0

    def __post_init__(self):
        m, e = int(self.mantissa), int(self.exponent)
        if e < 0:
            m, e = m << -e, 0
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            shift = min(tz, e)
            m >>= shift
            e -= shift
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    # -- conversions -------------------------------------------------
    @classmethod
    def coerce(cls, value: Union["Dyadic", int, float, Fraction, str]) -> "Dyadic":
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, int):
            return cls(value, 0)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"non-finite value {value!r}")
            return cls.from_fraction(Fraction(value))
        if isinstance(value, Rational):
            return cls.from_fraction(Fraction(value))
        raise TypeError(f"cannot interpret {value!r} as a dyadic rational")

    @classmethod
    def from_fraction(cls, q: Fraction) -> "Dyadic":
        den = q.denominator
        if den & (den - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        return cls(q.numerator, den.bit_length() - 1)

    @classmethod
    def floor(cls, value: Real, bits: int = DEFAULT_PRECISION) -> "Dyadic":
        """Largest multiple of ``2**-bits`` not exceeding ``value``."""
        q = Fraction(value) if not isinstance(value, Dyadic) else value.fraction
        return cls(math.floor(q * (1 << bits)), bits)

    @classmethod
    def ceil(cls, value: Real, bits: int = DEFAULT_PRECISION) -> "Dyadic":
        q = Fraction(value) if not isinstance(value, Dyadic) else value.fraction
        return cls(math.ceil(q * (1 << bits)), bits)

    @classmethod
    def nearest(cls, value: Real, bits: int = DEFAULT_PRECISION) -> "Dyadic":
        q = Fraction(value) if not isinstance(value, Dyadic) else value.fraction
        return cls(round(q * (1 << bits)), bits)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        m = _DYADIC_RE.match(text)
        if not m:
            raise ValueError(f"malformed dyadic {text!r}; expected m/2^e")
        return cls(int(m.group(1)), int(m.group(2) or 0))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.exponent)

    def __float__(self) -> float:
        return self.mantissa / (1 << self.exponent) if self.exponent < 1000 else float(self.fraction)

    def __str__(self) -> str:
        return f"{self.mantissa}/2^{self.exponent}"

    def __repr__(self) -> str:
        return f"Dyadic({self})"

    # -- arithmetic --------------------------------------------------
    def _align(self, other: "Dyadic"):
        e = max(self.exponent, other.exponent)
        return self.mantissa << (e - self.exponent), other.mantissa << (e - other.exponent), e

    def __add__(self, other):
        other = _maybe(other)
        if other is None:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a + b, e)

    __radd__ = __add__

    def __sub__(self, other):
        other = _maybe(other)
        if other is None:
            return NotImplemented
        a, b, e = self._align(other)
        return Dyadic(a - b, e)

    def __rsub__(self, other):
        other = _maybe(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = _maybe(other)
        if other is None:
            return NotImplemented
        return Dyadic(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.mantissa, self.exponent)

    def __abs__(self):
        return Dyadic(abs(self.mantissa), self.exponent)

    def half(self) -> "Dyadic":
        return Dyadic(self.mantissa, self.exponent + 1)

    # -- comparison (exact, also against floats and fractions) ---------
    def _cmp_key(self, other):
        if isinstance(other, Dyadic):
            return self.fraction, other.fraction
        if isinstance(other, (int, Fraction)):
            return self.fraction, Fraction(other)
        if isinstance(other, float):
            return self.fraction, Fraction(other)
        return None

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        key = self._cmp_key(other)
        return NotImplemented if key is None else key[0] == key[1]

    def __hash__(self):
        return hash((self.mantissa, self.exponent))

    def __lt__(self, other):
        key = self._cmp_key(other)
        return NotImplemented if key is None else key[0] < key[1]

    def __le__(self, other):
        key = self._cmp_key(other)
        return NotImplemented if key is None else key[0] <= key[1]

    def __gt__(self, other):
        key = self._cmp_key(other)
        return NotImplemented if key is None else key[0] > key[1]

    def __ge__(self, other):
        key = self._cmp_key(other)
        return NotImplemented if key is None else key[0] >= key[1]


def _maybe(value):
    if isinstance(value, Dyadic):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        try:
            return Dyadic.coerce(value)
        except ValueError:
            return None
    return None


@dataclass(frozen=True)
class DyadicInterval:
    """Closed interval ``[lo, hi]`` with dyadic endpoints."""

    lo: Dyadic
    hi: Dyadic

    def __post_init__(self):
        lo, hi = Dyadic.coerce(self.lo), Dyadic.coerce(self.hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def contains(self, value, tol: float = 0.0) -> bool:
        if tol:
            return float(self.lo) - tol <= float(value) <= float(self.hi) + tol
        return self.lo <= value <= self.hi

    def __contains__(self, value) -> bool:
        return self.contains(value)

    def subset_of(self, other: "DyadicInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def disjoint(self, other: "DyadicInterval") -> bool:
        return self.hi < other.lo or other.hi < self.lo

    def widen(self, slack) -> "DyadicInterval":
        s = Dyadic.coerce(slack)
        return DyadicInterval(self.lo - s, self.hi + s)

    @property
    def midpoint(self) -> float:
        return (float(self.lo) + float(self.hi)) / 2

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"

    @classmethod
    def parse(cls, text: str) -> "DyadicInterval":
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"malformed interval {text!r}")
        parts = body[1:-1].split(",")
        if len(parts) != 2:
            raise ValueError(f"malformed interval {text!r}")
        return cls(Dyadic.parse(parts[0]), Dyadic.parse(parts[1]))


def monus(x, y):
    """Truncated subtraction ``max(x - y, 0)``; exact on dyadic input."""
    if isinstance(x, Dyadic) or isinstance(y, Dyadic):
        x, y = Dyadic.coerce(x), Dyadic.coerce(y)
        d = x - y
        return d if d > 0 else Dyadic(0)
    return max(x - y, 0)


def interval_hull(values: Iterable[Real], slack=0, bits: int = DEFAULT_PRECISION) -> DyadicInterval:
    """Smallest interval on the ``2**-bits`` grid holding ``values``, widened by ``slack``."""
    vals = list(values)
    if not vals:
        raise ValueError("interval_hull of an empty set")
    s = Fraction(slack) if not isinstance(slack, Dyadic) else slack.fraction
    if s < 0:
        raise ValueError("slack must be non-negative")
    qs = [v.fraction if isinstance(v, Dyadic) else Fraction(v) for v in vals]
    for v in vals:
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError(f"non-finite value {v!r}")
    lo, hi = min(qs) - s, max(qs) + s
    return DyadicInterval(Dyadic.floor(lo, bits), Dyadic.ceil(hi, bits))


def slack_budget(op_count: int) -> float:
    """Declared floating-point error budget for a computation of ``op_count`` operations."""
    return SLACK_PER_OP * max(int(op_count), 1)
