"""Formulas of continuous logic over tracial von Neumann algebras.

Terms (:class:`Term`) are built from variables, the constants 0 and 1,
adjoint, complex scalars of modulus at most one, products and averages;
each of these maps unit-ball tuples into the unit ball of any algebra.
Formulas combine the real and imaginary parts of traces of terms and the
2-norm distance ``d(s, t) = ||s - t||_2`` with a fixed finite basis of
connectives, and may be prefixed by ``sup``/``inf`` quantifiers ranging
over the operator-norm unit ball.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Tuple, Union

from .numerics import Dyadic

__all__ = [
    "Term", "Var", "TConst", "Adj", "Scale", "Mul", "Avg",
    "Formula", "TrRe", "TrIm", "Dist", "Const", "Add", "Scaled",
    "Monus", "Max", "Min", "Abs", "Sqrt", "Quant",
    "FormulaError", "SentenceClass",
    "ZERO", "ONE",
    "term_vars", "term_degree", "free_vars", "bound_vars", "formula_degree",
    "size", "is_quantifier_free", "check_well_formed", "prefix", "with_prefix",
    "bounds", "lipschitz_modulus", "classify", "dualize", "terms_of",
    "max_of", "sub_const",
]


class FormulaError(ValueError):
    """Raised for malformed formulas or unsupported operations on them."""


# ---------------------------------------------------------------------------
# terms


class Term:
    __slots__ = ()

    def __mul__(self, other: "Term") -> "Term":
        return Mul(self, other)

    @property
    def adj(self) -> "Term":
        return Adj(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class TConst(Term):
    """The constant 0 or 1 of the algebra."""

    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise FormulaError("term constants are 0 and 1 only")


@dataclass(frozen=True)
class Adj(Term):
    arg: Term


@dataclass(frozen=True)
class Scale(Term):
    """``(re + i*im) * arg`` with dyadic coordinates and modulus at most 1."""

    re: Dyadic
    im: Dyadic
    arg: Term

    def __post_init__(self):
        re, im = Dyadic.coerce(self.re), Dyadic.coerce(self.im)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if re * re + im * im > 1:
            raise FormulaError(f"scalar {re} + {im} i has modulus exceeding 1")

    @property
    def value(self) -> complex:
        return complex(float(self.re), float(self.im))


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Avg(Term):
    left: Term
    right: Term


ZERO = TConst(0)
ONE = TConst(1)


# ---------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class TrRe(Formula):
    term: Term


@dataclass(frozen=True)
class TrIm(Formula):
    term: Term


@dataclass(frozen=True)
class Dist(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Const(Formula):
    value: Dyadic

    def __post_init__(self):
        object.__setattr__(self, "value", Dyadic.coerce(self.value))


@dataclass(frozen=True)
class Add(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Scaled(Formula):
    """A real dyadic multiple of a formula."""

    coef: Dyadic
    arg: Formula

    def __post_init__(self):
        object.__setattr__(self, "coef", Dyadic.coerce(self.coef))


@dataclass(frozen=True)
class Monus(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Max(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Min(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Abs(Formula):
    arg: Formula


@dataclass(frozen=True)
class Sqrt(Formula):
    """``sqrt(max(arg, 0))``."""

    arg: Formula


@dataclass(frozen=True)
class Quant(Formula):
    kind: str
    var: str
    body: Formula

    def __post_init__(self):
        if self.kind not in ("sup", "inf"):
            raise FormulaError(f"unknown quantifier {self.kind!r}")


BASIC = (TrRe, TrIm, Dist)
_BINARY = (Add, Monus, Max, Min)


class SentenceClass(str, Enum):
    QUANTIFIER_FREE = "quantifier-free"
    UNIVERSAL = "universal"
    EXISTENTIAL = "existential"
    EXISTS_FORALL = "exists-forall"
    OTHER = "other"


# ---------------------------------------------------------------------------
# structural helpers


def term_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, TConst):
        return frozenset()
    if isinstance(t, (Adj, Scale)):
        return term_vars(t.arg)
    if isinstance(t, (Mul, Avg)):
        return term_vars(t.left) | term_vars(t.right)
    raise FormulaError(f"not a term: {t!r}")


def term_degree(t: Term) -> int:
    """Length of the longest multiplicative chain of variables."""
    if isinstance(t, Var):
        return 1
    if isinstance(t, TConst):
        return 0
    if isinstance(t, (Adj, Scale)):
        return term_degree(t.arg)
    if isinstance(t, Mul):
        return term_degree(t.left) + term_degree(t.right)
    if isinstance(t, Avg):
        return max(term_degree(t.left), term_degree(t.right))
    raise FormulaError(f"not a term: {t!r}")


def terms_of(phi: Formula) -> Iterator[Term]:
    """Every term occurring directly under a basic formula."""
    if isinstance(phi, (TrRe, TrIm)):
        yield phi.term
    elif isinstance(phi, Dist):
        yield phi.left
        yield phi.right
    elif isinstance(phi, Const):
        return
    elif isinstance(phi, _BINARY):
        yield from terms_of(phi.left)
        yield from terms_of(phi.right)
    elif isinstance(phi, (Scaled, Abs, Sqrt)):
        yield from terms_of(phi.arg)
    elif isinstance(phi, Quant):
        yield from terms_of(phi.body)
    else:
        raise FormulaError(f"not a formula: {phi!r}")


def free_vars(phi: Formula) -> frozenset:
    if isinstance(phi, Quant):
        return free_vars(phi.body) - {phi.var}
    if isinstance(phi, (TrRe, TrIm)):
        return term_vars(phi.term)
    if isinstance(phi, Dist):
        return term_vars(phi.left) | term_vars(phi.right)
    if isinstance(phi, Const):
        return frozenset()
    if isinstance(phi, _BINARY):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Scaled, Abs, Sqrt)):
        return free_vars(phi.arg)
    raise FormulaError(f"not a formula: {phi!r}")


def bound_vars(phi: Formula) -> List[str]:
    """Quantified variable names in binding order (with repetition, if any)."""
    if isinstance(phi, Quant):
        return [phi.var] + bound_vars(phi.body)
    if isinstance(phi, _BINARY):
        return bound_vars(phi.left) + bound_vars(phi.right)
    if isinstance(phi, (Scaled, Abs, Sqrt)):
        return bound_vars(phi.arg)
    return []


def formula_degree(phi: Formula) -> int:
    return max((term_degree(t) for t in terms_of(phi)), default=0)


def _term_size(t: Term) -> int:
    if isinstance(t, (Var, TConst)):
        return 1
    if isinstance(t, (Adj, Scale)):
        return 1 + _term_size(t.arg)
    return 1 + _term_size(t.left) + _term_size(t.right)


def size(phi: Formula) -> int:
    """Operation count: nodes of the formula including its terms."""
    if isinstance(phi, (TrRe, TrIm)):
        return 1 + _term_size(phi.term)
    if isinstance(phi, Dist):
        return 3 + _term_size(phi.left) + _term_size(phi.right)
    if isinstance(phi, Const):
        return 1
    if isinstance(phi, _BINARY):
        return 1 + size(phi.left) + size(phi.right)
    if isinstance(phi, (Scaled, Abs, Sqrt)):
        return 1 + size(phi.arg)
    if isinstance(phi, Quant):
        return 1 + size(phi.body)
    raise FormulaError(f"not a formula: {phi!r}")


def is_quantifier_free(phi: Formula) -> bool:
    return not bound_vars(phi)


def check_well_formed(phi: Formula) -> Formula:
    """Validate node types and variable binding; returns ``phi``.

    A variable may be bound by at most one quantifier and may not also
    occur free.
    """
    def walk_term(t):
        if isinstance(t, (Var, TConst)):
            return
        if isinstance(t, (Adj, Scale)):
            walk_term(t.arg)
        elif isinstance(t, (Mul, Avg)):
            walk_term(t.left)
            walk_term(t.right)
        else:
            raise FormulaError(f"malformed term node {t!r}")

    def walk(f, bound):
        if isinstance(f, (TrRe, TrIm)):
            walk_term(f.term)
        elif isinstance(f, Dist):
            walk_term(f.left)
            walk_term(f.right)
        elif isinstance(f, Const):
            pass
        elif isinstance(f, _BINARY):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, (Scaled, Abs, Sqrt)):
            walk(f.arg, bound)
        elif isinstance(f, Quant):
            walk(f.body, bound | {f.var})
        else:
            raise FormulaError(f"malformed formula node {f!r}")

    walk(phi, frozenset())
    names = bound_vars(phi)
    if len(set(names)) != len(names):
        raise FormulaError(f"variable bound twice in {sorted(names)}")
    clash = set(names) & _all_free_occurrences(phi)
    if clash:
        raise FormulaError(f"variables {sorted(clash)} occur both bound and free")
    return phi


def _all_free_occurrences(phi: Formula) -> set:
    # free occurrences of names outside the scope of their binder
    if isinstance(phi, Quant):
        return _all_free_occurrences(phi.body) - {phi.var}
    if isinstance(phi, _BINARY):
        return _all_free_occurrences(phi.left) | _all_free_occurrences(phi.right)
    if isinstance(phi, (Scaled, Abs, Sqrt)):
        return _all_free_occurrences(phi.arg)
    return set(free_vars(phi))


def prefix(phi: Formula) -> Tuple[List[Tuple[str, str]], Formula]:
    """Split a prenex formula into its quantifier prefix and matrix."""
    quants = []
    while isinstance(phi, Quant):
        quants.append((phi.kind, phi.var))
        phi = phi.body
    return quants, phi


def with_prefix(quants, matrix: Formula) -> Formula:
    for kind, var in reversed(list(quants)):
        matrix = Quant(kind, var, matrix)
    return matrix


def max_of(parts) -> Formula:
    parts = list(parts)
    if not parts:
        raise FormulaError("max of nothing")
    out = parts[0]
    for p in parts[1:]:
        out = Max(out, p)
    return out


def sub_const(phi: Formula, c) -> Formula:
    """``phi - c`` for a dyadic constant ``c``."""
    return Add(phi, Const(-Dyadic.coerce(c)))


# ---------------------------------------------------------------------------
# value bounds and moduli


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def bounds(phi: Formula) -> Tuple[float, float]:
    """Compositional bounds ``(m, M)`` on the value of ``phi`` in any algebra.

    Basic trace formulas lie in [-1, 1] because ``|tr(a)| <= ||a||_2 <= 1``
    for a unit-ball element; distances lie in [0, 2].
    """
    if isinstance(phi, (TrRe, TrIm)):
        return -1.0, 1.0
    if isinstance(phi, Dist):
        return 0.0, 2.0
    if isinstance(phi, Const):
        v = phi.value
        return float(Dyadic.floor(v, 60)), float(Dyadic.ceil(v, 60))
    if isinstance(phi, Add):
        a, b = bounds(phi.left), bounds(phi.right)
        return _down(a[0] + b[0]), _up(a[1] + b[1])
    if isinstance(phi, Scaled):
        lo, hi = bounds(phi.arg)
        c = float(phi.coef)
        ends = sorted((c * lo, c * hi))
        return _down(ends[0]), _up(ends[1])
    if isinstance(phi, Monus):
        a, b = bounds(phi.left), bounds(phi.right)
        return max(_down(a[0] - b[1]), 0.0), max(_up(a[1] - b[0]), 0.0)
    if isinstance(phi, Max):
        a, b = bounds(phi.left), bounds(phi.right)
        return max(a[0], b[0]), max(a[1], b[1])
    if isinstance(phi, Min):
        a, b = bounds(phi.left), bounds(phi.right)
        return min(a[0], b[0]), min(a[1], b[1])
    if isinstance(phi, Abs):
        lo, hi = bounds(phi.arg)
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0.0, max(-lo, hi)
    if isinstance(phi, Sqrt):
        lo, hi = bounds(phi.arg)
        return _down(math.sqrt(max(lo, 0.0))), _up(math.sqrt(max(hi, 0.0)))
    if isinstance(phi, Quant):
        return bounds(phi.body)
    raise FormulaError(f"not a formula: {phi!r}")


def _term_norm(t: Term) -> float:
    """Bound on the operator norm of ``t`` over unit-ball arguments."""
    if isinstance(t, Var):
        return 1.0
    if isinstance(t, TConst):
        return float(t.value)
    if isinstance(t, Adj):
        return _term_norm(t.arg)
    if isinstance(t, Scale):
        return abs(t.value) * _term_norm(t.arg)
    if isinstance(t, Mul):
        return _term_norm(t.left) * _term_norm(t.right)
    if isinstance(t, Avg):
        return (_term_norm(t.left) + _term_norm(t.right)) / 2
    raise FormulaError(f"not a term: {t!r}")


def _term_modulus(t: Term, v: str) -> float:
    if isinstance(t, Var):
        return 1.0 if t.name == v else 0.0
    if isinstance(t, TConst):
        return 0.0
    if isinstance(t, Adj):
        return _term_modulus(t.arg, v)
    if isinstance(t, Scale):
        return abs(t.value) * _term_modulus(t.arg, v)
    if isinstance(t, Mul):
        # ||st - s't'||_2 <= ||s - s'||_2 ||t||_op + ||s'||_op ||t - t'||_2
        return (_term_modulus(t.left, v) * _term_norm(t.right)
                + _term_norm(t.left) * _term_modulus(t.right, v))
    if isinstance(t, Avg):
        return (_term_modulus(t.left, v) + _term_modulus(t.right, v)) / 2
    raise FormulaError(f"not a term: {t!r}")


def lipschitz_modulus(phi: Formula, v: str) -> float:
    """Lipschitz constant of ``phi`` in the variable ``v`` for the 2-norm metric.

    Valid for unit-ball arguments.  A variable that does not occur gives 0;
    asking for a bound variable is an error.
    """
    if v in bound_vars(phi):
        raise FormulaError(f"variable {v!r} is bound, not free")
    return _modulus(phi, v)


def _modulus(phi: Formula, v: str) -> float:
    if isinstance(phi, (TrRe, TrIm)):
        return _term_modulus(phi.term, v)
    if isinstance(phi, Dist):
        return _term_modulus(phi.left, v) + _term_modulus(phi.right, v)
    if isinstance(phi, Const):
        return 0.0
    if isinstance(phi, (Add, Monus)):
        return _modulus(phi.left, v) + _modulus(phi.right, v)
    if isinstance(phi, (Max, Min)):
        return max(_modulus(phi.left, v), _modulus(phi.right, v))
    if isinstance(phi, Scaled):
        return abs(float(phi.coef)) * _modulus(phi.arg, v)
    if isinstance(phi, Abs):
        return _modulus(phi.arg, v)
    if isinstance(phi, Sqrt):
        inner = _modulus(phi.arg, v)
        if inner == 0.0:
            return 0.0
        lo, _ = bounds(phi.arg)
        if lo <= 0:
            return math.inf
        return inner / (2 * math.sqrt(lo))
    if isinstance(phi, Quant):
        return _modulus(phi.body, v)
    raise FormulaError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# classification and duality


def classify(sigma: Formula) -> SentenceClass:
    if free_vars(sigma):
        raise FormulaError(f"not a sentence: free variables {sorted(free_vars(sigma))}")
    quants, matrix = prefix(sigma)
    if not is_quantifier_free(matrix):
        return SentenceClass.OTHER
    kinds = [k for k, _ in quants]
    if not kinds:
        return SentenceClass.QUANTIFIER_FREE
    if all(k == "sup" for k in kinds):
        return SentenceClass.UNIVERSAL
    if all(k == "inf" for k in kinds):
        return SentenceClass.EXISTENTIAL
    n_inf = kinds.index("sup")
    if all(k == "sup" for k in kinds[n_inf:]):
        return SentenceClass.EXISTS_FORALL
    return SentenceClass.OTHER


def dualize(sigma: Formula) -> Formula:
    """``inf ... (M ∸ matrix)`` for a universal ``sup ... matrix``, where M = upper bound of sigma.

    In every algebra the value of the result equals ``M ∸ value(sigma)``.
    """
    quants, matrix = prefix(sigma)
    if not quants or any(k != "sup" for k, _ in quants) or not is_quantifier_free(matrix):
        raise FormulaError("dualize expects a universal formula")
    top = Dyadic.ceil(bounds(sigma)[1], 60)
    return with_prefix([("inf", v) for _, v in quants], Monus(Const(top), matrix))
