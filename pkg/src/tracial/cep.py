"""Moment separation sentences and scans along mixtures of two algebras."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .algebra import AlgElement, TracialAlgebra, in_unit_ball, interpolate, trace
from .evaluate import CertificationError, CertifiedValue, certify, eval_term
from .formula import Abs, Adj, Const, Formula, Max, Mul, Term, TrIm, TrRe, Var, max_of, with_prefix, Add
from .numerics import Dyadic

__all__ = [
    "SeparationSentence", "build_separation", "monomials", "interpolation_scan",
    "distinct_values_demo", "PreconditionError", "CONSTANT_BITS", "MAX_MONOMIALS",
]

#: constants tr(p(a)) are truncated to this many fractional bits
CONSTANT_BITS = 24
MAX_MONOMIALS = 4096


class PreconditionError(ValueError):
    pass


def monomials(k: int, N: int) -> List[Tuple[Tuple[int, bool], ...]]:
    """Words of length 1..N over letters ``(i, starred)``, by length then lexicographically."""
    letters = [(i, s) for i in range(k) for s in (False, True)]
    total = sum(len(letters) ** d for d in range(1, N + 1))
    if total > MAX_MONOMIALS:
        raise PreconditionError(f"{total} monomials exceed the limit of {MAX_MONOMIALS}")
    return [w for d in range(1, N + 1) for w in itertools.product(letters, repeat=d)]


def _word_term(word, names) -> Term:
    factors = [Adj(Var(names[i])) if s else Var(names[i]) for i, s in word]
    out = factors[0]
    for f in factors[1:]:
        out = Mul(out, f)
    return out


def _truncate(x: float) -> Dyadic:
    return Dyadic.nearest(x, CONSTANT_BITS)


@dataclass(frozen=True)
class SeparationSentence:
    """``inf_x max_p max(|trRe p(x) - trRe p(a)|, |trIm p(x) - trIm p(a)|)``."""

    N: int
    algebra: TracialAlgebra
    a: Tuple[AlgElement, ...]
    formula: Formula
    names: Tuple[str, ...]
    #: bound on the error introduced by truncating the moment constants
    slack: float = field(default=2.0 ** -CONSTANT_BITS)

    def certify(self, A: TracialAlgebra, eps, **kw) -> CertifiedValue:
        hints = list(kw.pop("hints", ()))
        if A == self.algebra:
            hints.append(dict(zip(self.names, self.a)))
        return certify(A, self.formula, eps, hints=hints,
                       extra_slack=self.slack + kw.pop("extra_slack", 0.0), **kw)


def build_separation(N: int, A: TracialAlgebra, a: Sequence[AlgElement]) -> SeparationSentence:
    if N < 1:
        raise PreconditionError("N must be at least 1")
    a = tuple(a)
    if not a:
        raise PreconditionError("empty tuple")
    for x in a:
        if x.algebra != A or not in_unit_ball(A, x):
            raise PreconditionError("tuple entries must lie in the unit ball of the algebra")
    names = tuple(f"x{i + 1}" for i in range(len(a))) if len(a) > 1 else ("x",)
    asg = dict(zip(names, a))
    parts = []
    for word in monomials(len(a), N):
        t = _word_term(word, names)
        z = trace(A, eval_term(A, t, asg))
        cre, cim = _truncate(z.real), _truncate(z.imag)
        parts.append(Max(Abs(Add(TrRe(t), Const(-cre))), Abs(Add(TrIm(t), Const(-cim)))))
    phi = with_prefix([("inf", v) for v in names], max_of(parts))
    return SeparationSentence(N, A, a, phi, names)


def interpolation_scan(sigma: Formula, B: TracialAlgebra, A: TracialAlgebra, grid, eps,
                       **kw) -> List[Tuple[Dyadic, CertifiedValue]]:
    """Certified values of ``sigma`` on ``interpolate(B, A, t)`` for each ``t`` in ``grid``."""
    out = []
    for t in grid:
        t = Dyadic.coerce(t)
        if t < 0 or t > 1:
            raise PreconditionError(f"grid point {t} outside [0, 1]")
        out.append((t, certify(interpolate(B, A, t), sigma, eps, **kw)))
    return out


def distinct_values_demo(sigma: Formula, B: TracialAlgebra, A: TracialAlgebra, count: int, eps,
                         max_level: int = 6, **kw) -> List[Tuple[Dyadic, CertifiedValue]]:
    """Grid points of the interpolation family with pairwise disjoint certified values.

    The dyadic grid is refined level by level; at each level intervals are
    chosen greedily in order of ``t``.  Returns as many as could be separated,
    which may be fewer than ``count`` when ``max_level`` is reached.
    """
    if count < 1:
        raise PreconditionError("count must be positive")
    cache = {}

    def value(t: Dyadic) -> CertifiedValue:
        if t not in cache:
            cache[t] = certify(interpolate(B, A, t), sigma, eps, **kw)
        return cache[t]

    lo_end, hi_end = value(Dyadic(0)), value(Dyadic(1))
    if not lo_end.interval.disjoint(hi_end.interval):
        raise PreconditionError(
            f"endpoint values {lo_end.interval} and {hi_end.interval} are not separated at eps {eps}")
    best: List[Tuple[Dyadic, CertifiedValue]] = []
    for level in range(1, max_level + 1):
        chosen: List[Tuple[Dyadic, CertifiedValue]] = []
        for k in range(2 ** level + 1):
            t = Dyadic(k, level)
            cv = value(t)
            if all(cv.interval.disjoint(c.interval) for _, c in chosen):
                chosen.append((t, cv))
        if len(chosen) > len(best):
            best = chosen
        if len(best) >= count:
            break
    return best
