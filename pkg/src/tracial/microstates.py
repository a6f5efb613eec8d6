"""Values of universal and existential sentences along ``M_1 < M_2 < M_4 < ...``.

Every level is embedded in the next by ``x -> x (+) x``, so universal values
can only grow along the chain and existential values can only shrink.  The
hyperfinite factor contains the whole chain, which makes the last level a
lower bound (universal) or upper bound (existential) for its value there.
Nothing beyond that is claimed.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .algebra import TracialAlgebra, matrix_algebra
from .evaluate import CertificationError, CertifiedValue, certify, optimize
from .evaluate.certify import DEFAULT_CAP
from .formula import Formula, FormulaError, SentenceClass, classify
from .parallel import pmap
from .parser import format_formula

__all__ = ["LevelRecord", "MicrostateReport", "Comparison", "microstate_sequence", "compare_universal",
           "DEFAULT_K_MAX"]

DEFAULT_K_MAX = 2

#: the interval has width at most the requested eps
CERTIFIED = "certified"
#: the interval is rigorous but wider than eps (search limits reached)
WIDE = "wide"


@dataclass(frozen=True)
class LevelRecord:
    k: int
    value: CertifiedValue

    @property
    def n(self) -> int:
        return 2 ** self.k

    @property
    def tag(self) -> str:
        return CERTIFIED if self.value.certified else WIDE


def _monotone(levels: List[LevelRecord], universal: bool) -> bool:
    # no certified evidence of a step in the wrong direction
    for a, b in zip(levels, levels[1:]):
        if universal and a.value.lo > b.value.hi:
            return False
        if not universal and a.value.hi < b.value.lo:
            return False
    return True


@dataclass(frozen=True)
class MicrostateReport:
    sentence: Formula
    sentence_class: SentenceClass
    eps: float
    levels: Tuple[LevelRecord, ...]

    @property
    def universal(self) -> bool:
        return self.sentence_class is SentenceClass.UNIVERSAL

    @property
    def monotone(self) -> bool:
        """True when no pair of adjacent levels proves a step against the embedding order."""
        return _monotone(list(self.levels), self.universal)

    @property
    def bound(self) -> Tuple[str, float]:
        last = self.levels[-1].value
        if self.universal:
            return "lower bound for the value on R", last.lo
        return "upper bound for the value on R", last.hi

    def to_text(self) -> str:
        lines = [f"sentence: {format_formula(self.sentence)}",
                 f"class: {self.sentence_class.value}",
                 f"eps: {self.eps!r}"]
        for rec in self.levels:
            lines.append(f"level k={rec.k} n={rec.n} interval={rec.value.interval} tag={rec.tag}")
        lines.append(f"monotone: {'yes' if self.monotone else 'no'}")
        label, value = self.bound
        lines.append(f"{label}: {value!r}")
        return "\n".join(lines) + "\n"


def certify_or_widen(A: TracialAlgebra, sigma: Formula, eps, **kw) -> CertifiedValue:
    """``certify``, falling back to the rigorous but wider interval when limits are hit."""
    try:
        return certify(A, sigma, eps, **kw)
    except CertificationError as err:
        if isinstance(err.partial, CertifiedValue):
            return err.partial
        raise


def _level(k: int, sigma: Formula, eps, kw) -> LevelRecord:
    return LevelRecord(k, certify_or_widen(matrix_algebra(2 ** k), sigma, eps, **kw))


def microstate_sequence(sigma: Formula, k_max: int = DEFAULT_K_MAX, eps=2.0 ** -4, **kw) -> MicrostateReport:
    """Certified values of ``sigma`` on ``M_{2^k}`` for ``k = 0..k_max``.

    Levels whose certification exceeds the dimension cap or node budget
    keep the rigorous interval reached so far and are tagged ``wide``.
    """
    cls = classify(sigma)
    if cls not in (SentenceClass.UNIVERSAL, SentenceClass.EXISTENTIAL):
        raise FormulaError(f"microstate sequences need a universal or existential sentence, not {cls.value}")
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    levels = pmap(functools.partial(_level, sigma=sigma, eps=eps, kw=kw), range(k_max + 1))
    return MicrostateReport(sigma, cls, float(eps), tuple(levels))


@dataclass(frozen=True)
class Comparison:
    value: CertifiedValue
    report: MicrostateReport
    #: "provably-above", "provably-below" or "indistinguishable"
    verdict: str

    def to_text(self) -> str:
        return (self.report.to_text()
                + f"algebra value: {self.value.interval}\nverdict: {self.verdict}\n")


def compare_universal(sigma: Formula, A: TracialAlgebra, k_max: int = DEFAULT_K_MAX, eps=2.0 ** -4,
                      **kw) -> Comparison:
    """Compare ``sigma`` on ``A`` with the last level of the matrix chain."""
    if classify(sigma) is not SentenceClass.UNIVERSAL:
        raise FormulaError("compare_universal needs a universal sentence")
    value = certify_or_widen(A, sigma, eps, **kw)
    report = microstate_sequence(sigma, k_max, eps, **kw)
    ref = report.levels[-1].value
    if value.lo > ref.hi:
        verdict = "provably-above"
    elif value.hi < ref.lo:
        verdict = "provably-below"
    else:
        verdict = "indistinguishable"
    return Comparison(value, report, verdict)
