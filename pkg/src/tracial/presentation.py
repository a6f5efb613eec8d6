"""Presented algebras: enumerated generators, exact interval oracles, codes.

A :class:`Presentation` is a carrier algebra with a sequence of unit-ball
generator tuples: an explicit list, optionally continued forever by a
seeded rule.  All generator entries are dyadic, so traces of terms in the
generators are exact rationals and the oracle intervals can be computed
exactly and nest.
"""
from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .algebra import AlgElement, TracialAlgebra, in_unit_ball, random_unit_ball, random_unitary
from .evaluate import CertificationError, CertifiedValue, certify
from .formula import (
    Abs, Add, Adj, Avg, Const, Dist, Formula, FormulaError, Max, Min, Monus, Mul, Quant, Scale, Scaled,
    SentenceClass, Sqrt, TConst, Term, TrIm, TrRe, Var, classify, free_vars, prefix, term_vars, with_prefix,
)
from .microstates import certify_or_widen
from .numerics import Dyadic, DyadicInterval

__all__ = [
    "Presentation", "BallRule", "PresentationError", "DecodeError", "WitnessExhausted",
    "encode", "decode", "enumerate_value", "formula_interval", "good_witness",
    "EABound", "upper_enumerate_ea", "MAGIC", "VERSION",
]

MAGIC = b"TVNA"
VERSION = 1
#: entries produced by the rule are rounded to this many fractional bits
RULE_BITS = 32
_RULE_SHRINK = 1.0 - 1e-6


class PresentationError(ValueError):
    pass


class DecodeError(PresentationError):
    pass


class WitnessExhausted(PresentationError):
    """No generator reached the reference value."""


@dataclass(frozen=True)
class BallRule:
    """Generators ``i = 0, 1, ...``: Haar unitaries at even ``i``, ball samples at odd ``i``.

    Entries are shrunk slightly and rounded to ``2**-32`` so they are dyadic
    and stay in the ball.
    """

    seed: int

    def element(self, A: TracialAlgebra, i: int, slot: int) -> AlgElement:
        s = (self.seed, i, slot)
        x = random_unitary(A, s) if i % 2 == 0 else random_unit_ball(A, s)
        scale = float(1 << RULE_BITS)
        return AlgElement(A, [np.round(b * _RULE_SHRINK * scale) / scale for b in x.blocks])


def _as_tuple(g) -> Tuple[AlgElement, ...]:
    return (g,) if isinstance(g, AlgElement) else tuple(g)


@dataclass(frozen=True, eq=True)
class Presentation:
    carrier: TracialAlgebra
    generators: Tuple[Tuple[AlgElement, ...], ...]
    arity: int = 1
    rule: Optional[BallRule] = None

    def __init__(self, carrier: TracialAlgebra, generators: Sequence = (), arity: Optional[int] = None,
                 rule: Optional[BallRule] = None):
        gens = tuple(_as_tuple(g) for g in generators)
        if arity is None:
            arity = len(gens[0]) if gens else 1
        if arity < 1:
            raise PresentationError("arity must be positive")
        for i, g in enumerate(gens):
            if len(g) != arity:
                raise PresentationError(f"generator {i} has {len(g)} entries, expected {arity}")
            for x in g:
                if x.algebra != carrier:
                    raise PresentationError(f"generator {i} does not live in {carrier}")
                if not in_unit_ball(carrier, x):
                    raise PresentationError(f"generator {i} is outside the unit ball")
        if not gens and rule is None:
            raise PresentationError("a presentation needs generators or a rule")
        object.__setattr__(self, "carrier", carrier)
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "arity", int(arity))
        object.__setattr__(self, "rule", rule)

    @property
    def finite(self) -> bool:
        return self.rule is None

    def __len__(self) -> int:
        if self.rule is not None:
            raise TypeError("rule-generated presentations are infinite")
        return len(self.generators)

    def generator(self, i: int) -> Tuple[AlgElement, ...]:
        if i < 0:
            raise IndexError(f"invalid generator index {i}")
        if i < len(self.generators):
            return self.generators[i]
        if self.rule is None:
            raise IndexError(f"generator index {i} beyond the {len(self.generators)} listed")
        j = i - len(self.generators)
        return tuple(self.rule.element(self.carrier, j, s) for s in range(self.arity))

    def __iter__(self) -> Iterator[Tuple[AlgElement, ...]]:
        for i in itertools.count():
            if self.rule is None and i >= len(self.generators):
                return
            yield self.generator(i)


# ---------------------------------------------------------------------------
# exact evaluation

class _Exact:
    """Complex matrix with exact rational entries, stored as real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re, self.im = re, im

    @classmethod
    def of(cls, m: np.ndarray) -> "_Exact":
        f = np.vectorize(lambda v: Fraction(float(v)), otypes=[object])
        return cls(f(m.real), f(m.imag))

    @classmethod
    def scalar(cls, n: int, c: Fraction) -> "_Exact":
        re = np.full((n, n), Fraction(0), dtype=object)
        im = np.full((n, n), Fraction(0), dtype=object)
        for k in range(n):
            re[k, k] = c
        return cls(re, im)

    def __matmul__(self, o):
        return _Exact(self.re @ o.re - self.im @ o.im, self.re @ o.im + self.im @ o.re)

    def __add__(self, o):
        return _Exact(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return _Exact(self.re - o.re, self.im - o.im)

    def times(self, a: Fraction, b: Fraction) -> "_Exact":
        return _Exact(self.re * a - self.im * b, self.re * b + self.im * a)

    def adj(self):
        return _Exact(self.re.T.copy(), -self.im.T)

    def trace(self) -> Tuple[Fraction, Fraction]:
        n = self.re.shape[0]
        return (sum((self.re[k, k] for k in range(n)), Fraction(0)),
                sum((self.im[k, k] for k in range(n)), Fraction(0)))


def _exact_term(A: TracialAlgebra, t: Term, env: Mapping[str, List[_Exact]], cache) -> List[_Exact]:
    key = id(t)
    if key in cache:
        return cache[key][1]
    if isinstance(t, Var):
        out = env[t.name]
    elif isinstance(t, TConst):
        out = [_Exact.scalar(n, Fraction(t.value)) for n in A.dims]
    elif isinstance(t, Adj):
        out = [b.adj() for b in _exact_term(A, t.arg, env, cache)]
    elif isinstance(t, Scale):
        a, b = t.re.fraction, t.im.fraction
        out = [m.times(a, b) for m in _exact_term(A, t.arg, env, cache)]
    elif isinstance(t, Mul):
        out = [p @ q for p, q in zip(_exact_term(A, t.left, env, cache), _exact_term(A, t.right, env, cache))]
    elif isinstance(t, Avg):
        half = Fraction(1, 2)
        out = [(p + q).times(half, Fraction(0))
               for p, q in zip(_exact_term(A, t.left, env, cache), _exact_term(A, t.right, env, cache))]
    else:
        raise FormulaError(f"not a term: {t!r}")
    cache[key] = (t, out)
    return out


def _exact_trace(A: TracialAlgebra, blocks: List[_Exact]) -> Tuple[Fraction, Fraction]:
    re, im = Fraction(0), Fraction(0)
    for (n, w), b in zip(A.blocks, blocks):
        r, i = b.trace()
        re += w.fraction * r / n
        im += w.fraction * i / n
    return re, im


def _bind(P: Presentation, names: Sequence[str], indices) -> Dict[str, List[_Exact]]:
    if isinstance(indices, Mapping):
        pairs = [(name, indices[name]) for name in names]
    else:
        indices = list(indices)
        if len(indices) != len(names):
            raise PresentationError(f"{len(indices)} indices for variables {list(names)}")
        pairs = list(zip(names, indices))
    env = {}
    for name, idx in pairs:
        i, slot = (idx, 0) if isinstance(idx, int) else idx
        try:
            g = P.generator(int(i))
        except IndexError as e:
            raise PresentationError(str(e)) from None
        if not 0 <= slot < P.arity:
            raise PresentationError(f"slot {slot} outside arity {P.arity}")
        env[name] = [_Exact.of(b) for b in g[slot].blocks]
    return env


def _grid(v: Fraction, n: int) -> DyadicInterval:
    k = math.floor(v * (1 << n))
    return DyadicInterval(Dyadic(k, n), Dyadic(k + 1, n))


def enumerate_value(P: Presentation, f: Term, indices, n: int, channel: str = "re") -> DyadicInterval:
    """Interval of width ``2**-n`` around the real or imaginary part of ``tr f``.

    Variables of ``f`` are bound in sorted order to ``indices``; an index is
    a generator number (first slot) or a ``(number, slot)`` pair, and a
    mapping from variable names is also accepted.  Intervals are aligned to
    the dyadic grid, so raising ``n`` refines them.
    """
    if n < 0:
        raise PresentationError("precision must be non-negative")
    if channel not in ("re", "im"):
        raise PresentationError(f"unknown channel {channel!r}")
    names = sorted(term_vars(f))
    env = _bind(P, names, indices)
    re, im = _exact_trace(P.carrier, _exact_term(P.carrier, f, env, {}))
    return _grid(re if channel == "re" else im, n)


def _sqrt_interval(q: Fraction, m: int) -> Tuple[Fraction, Fraction]:
    if q <= 0:
        return Fraction(0), Fraction(0)
    scaled = q * (1 << (2 * m))
    r = math.isqrt(math.floor(scaled))
    lo = Fraction(r, 1 << m)
    hi = lo if lo * lo == q else Fraction(r + 1, 1 << m)
    return lo, hi


def _formula_interval(A, phi: Formula, env, m: int, cache) -> Tuple[Fraction, Fraction]:
    go = lambda p: _formula_interval(A, p, env, m, cache)
    if isinstance(phi, (TrRe, TrIm)):
        re, im = _exact_trace(A, _exact_term(A, phi.term, env, cache))
        v = re if isinstance(phi, TrRe) else im
        return v, v
    if isinstance(phi, Dist):
        diff = [p - q for p, q in zip(_exact_term(A, phi.left, env, cache), _exact_term(A, phi.right, env, cache))]
        sq, _ = _exact_trace(A, [d.adj() @ d for d in diff])
        return _sqrt_interval(sq, m)
    if isinstance(phi, Const):
        return phi.value.fraction, phi.value.fraction
    if isinstance(phi, Add):
        (a, b), (c, d) = go(phi.left), go(phi.right)
        return a + c, b + d
    if isinstance(phi, Scaled):
        a, b = go(phi.arg)
        c = phi.coef.fraction
        return (c * a, c * b) if c >= 0 else (c * b, c * a)
    if isinstance(phi, Monus):
        (a, b), (c, d) = go(phi.left), go(phi.right)
        return max(a - d, Fraction(0)), max(b - c, Fraction(0))
    if isinstance(phi, Max):
        (a, b), (c, d) = go(phi.left), go(phi.right)
        return max(a, c), max(b, d)
    if isinstance(phi, Min):
        (a, b), (c, d) = go(phi.left), go(phi.right)
        return min(a, c), min(b, d)
    if isinstance(phi, Abs):
        a, b = go(phi.arg)
        if a >= 0:
            return a, b
        if b <= 0:
            return -b, -a
        return Fraction(0), max(-a, b)
    if isinstance(phi, Sqrt):
        a, b = go(phi.arg)
        return _sqrt_interval(a, m)[0], _sqrt_interval(b, m)[1]
    raise FormulaError(f"not a quantifier-free formula: {phi!r}")


def formula_interval(P: Presentation, phi: Formula, indices, n: int) -> DyadicInterval:
    """Rigorous interval of width at most ``2**-n`` for ``phi`` at the named generators."""
    names = sorted(free_vars(phi))
    env = _bind(P, names, indices)
    cache: dict = {}
    m = n + 2
    while True:
        lo, hi = _formula_interval(P.carrier, phi, env, m, cache)
        if hi - lo <= Fraction(1, 1 << (n + 1)):
            return DyadicInterval(Dyadic(math.floor(lo * (1 << (m + 2))), m + 2),
                                  Dyadic(math.ceil(hi * (1 << (m + 2))), m + 2))
        m += 4


# ---------------------------------------------------------------------------
# Goedel codes

def _put_int(out: bytearray, v: int) -> None:
    raw = v.to_bytes((v.bit_length() + 8) // 8 or 1, "little", signed=True)
    out += struct.pack("<H", len(raw)) + raw


def _put_dyadic(out: bytearray, d: Dyadic) -> None:
    _put_int(out, d.mantissa)
    out += struct.pack("<I", d.exponent)


class _Reader:
    def __init__(self, data: bytes):
        self.data, self.pos = bytes(data), 0

    def take(self, k: int) -> bytes:
        if self.pos + k > len(self.data):
            raise DecodeError(f"truncated code: needed {k} bytes at offset {self.pos}")
        out = self.data[self.pos:self.pos + k]
        self.pos += k
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def int_(self) -> int:
        (k,) = self.unpack("<H")
        if k == 0:
            raise DecodeError("empty integer field")
        return int.from_bytes(self.take(k), "little", signed=True)

    def dyadic(self) -> Dyadic:
        m = self.int_()
        (e,) = self.unpack("<I")
        d = Dyadic(m, e)
        if (d.mantissa, d.exponent) != (m, e):
            raise DecodeError("non-canonical dyadic in code")
        return d


def encode(P: Presentation) -> bytes:
    """Canonical byte string for ``P``.

    Layout (little-endian): ``b"TVNA"``, version ``u8``; block count ``u16``
    then per block ``u32`` size and dyadic weight; arity ``u16``; generator
    count ``u32`` then every generator entry as two dyadics (real and
    imaginary part) in slot, block, row-major order; rule kind ``u8`` (0 none,
    1 ball rule) followed by a signed integer seed for kind 1.  A dyadic is a
    length-prefixed two's-complement mantissa and a ``u32`` exponent.
    ``int.from_bytes(code, "little")`` reads the code as a natural number.
    """
    out = bytearray(MAGIC)
    out += struct.pack("<B", VERSION)
    out += struct.pack("<H", len(P.carrier.blocks))
    for n, w in P.carrier.blocks:
        out += struct.pack("<I", n)
        _put_dyadic(out, w)
    out += struct.pack("<H", P.arity)
    out += struct.pack("<I", len(P.generators))
    for g in P.generators:
        for x in g:
            for b in x.blocks:
                for v in b.reshape(-1):
                    _put_dyadic(out, Dyadic.coerce(float(v.real)))
                    _put_dyadic(out, Dyadic.coerce(float(v.imag)))
    if P.rule is None:
        out += struct.pack("<B", 0)
    else:
        out += struct.pack("<B", 1)
        _put_int(out, P.rule.seed)
    return bytes(out)


def decode(code: bytes) -> Presentation:
    r = _Reader(code)
    if r.take(4) != MAGIC:
        raise DecodeError("bad magic")
    (version,) = r.unpack("<B")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}")
    (nb,) = r.unpack("<H")
    blocks = []
    for _ in range(nb):
        (n,) = r.unpack("<I")
        blocks.append((n, r.dyadic()))
    try:
        A = TracialAlgebra(blocks)
    except ValueError as e:
        raise DecodeError(f"bad block table: {e}") from None
    (arity,) = r.unpack("<H")
    (count,) = r.unpack("<I")
    gens = []
    for _ in range(count):
        g = []
        for _ in range(arity):
            mats = []
            for n in A.dims:
                vals = [complex(float(r.dyadic()), float(r.dyadic())) for _ in range(n * n)]
                mats.append(np.array(vals, dtype=complex).reshape(n, n))
            g.append(AlgElement(A, mats))
        gens.append(tuple(g))
    (kind,) = r.unpack("<B")
    if kind == 0:
        rule = None
    elif kind == 1:
        rule = BallRule(r.int_())
    else:
        raise DecodeError(f"unknown rule kind {kind}")
    if r.pos != len(r.data):
        raise DecodeError(f"{len(r.data) - r.pos} trailing bytes")
    try:
        return Presentation(A, gens, arity, rule)
    except PresentationError as e:
        raise DecodeError(str(e)) from None


# ---------------------------------------------------------------------------
# dovetailing

def _single_block(sigma: Formula, kind: str, what: str):
    quants, matrix = prefix(sigma)
    if not quants or any(k != kind for k, _ in quants):
        raise FormulaError(f"{what} needs a sentence with a {kind} prefix")
    return [v for _, v in quants], matrix


def good_witness(code: Union[bytes, Presentation], sigma: Formula, eps, *, max_stage: int = 4096,
                 **certify_kw) -> int:
    """Index ``N`` with ``sigma <= max_{i <= N} phi(a_i) + eps`` for ``sigma = sup_x phi(x)``.

    A reference interval ``[c, d]`` of width at most ``eps/2`` is certified
    on the carrier.  Then, at stage ``s = 0, 1, ...``, generators ``0..s``
    are evaluated to precision ``2**-s``; the first generator whose interval
    lies above ``c - eps/2`` is returned.
    """
    P = decode(code) if isinstance(code, (bytes, bytearray)) else code
    if classify(sigma) is not SentenceClass.UNIVERSAL:
        raise FormulaError("good_witness needs a universal sentence")
    names, matrix = _single_block(sigma, "sup", "good_witness")
    if len(names) != P.arity:
        raise PresentationError(f"sentence has {len(names)} variables, generators have arity {P.arity}")
    eps_q = Dyadic.coerce(eps).fraction
    if eps_q <= 0:
        raise ValueError("eps must be positive")
    ref = certify(P.carrier, sigma, Dyadic.from_fraction(eps_q / 2), **certify_kw)
    threshold = ref.interval.lo.fraction - eps_q / 2
    slots = {v: j for j, v in enumerate(names)}
    rejected = set()
    for s in range(max_stage):
        for i in range(s + 1):
            if i in rejected:
                continue
            if P.finite and i >= len(P.generators):
                break
            iv = formula_interval(P, matrix, {v: (i, slots[v]) for v in names}, s)
            if iv.lo.fraction >= threshold:
                return i
            if iv.hi.fraction < threshold:
                rejected.add(i)
        if P.finite and len(rejected) == len(P.generators):
            raise WitnessExhausted(
                f"no generator reaches {float(threshold):.6g}; all {len(P.generators)} are below it")
    raise WitnessExhausted(f"no good generator found within {max_stage} stages")


@dataclass(frozen=True)
class EABound:
    step: int
    index: int
    #: certified interval for the inner sup at this generator
    inner: CertifiedValue
    running_min: float

    @property
    def bound(self) -> float:
        return self.inner.hi

    def to_text(self) -> str:
        return f"step {self.step} generator {self.index}: bound <= {self.inner.interval.hi}"


def upper_enumerate_ea(P: Presentation, sigma: Formula, eps, steps: int, **certify_kw) -> Iterator[EABound]:
    """Upper bounds for ``sigma = inf_x sup_y phi`` from the presentation's generators.

    Each generator tuple ``a`` gives the sound bound ``sigma <= sup_y phi(a, y)``,
    whose certified upper end is emitted.
    """
    if classify(sigma) is not SentenceClass.EXISTS_FORALL:
        raise FormulaError("upper_enumerate_ea needs an exists-forall sentence")
    quants, matrix = prefix(sigma)
    split = [k for k, _ in quants].index("sup")
    outer = [v for _, v in quants[:split]]
    if len(outer) != P.arity:
        raise PresentationError(f"sentence has {len(outer)} outer variables, generators have arity {P.arity}")
    inner = with_prefix(quants[split:], matrix)
    best = math.inf
    for step, g in enumerate(itertools.islice(iter(P), steps)):
        cv = certify_or_widen(P.carrier, inner, eps, assignment=dict(zip(outer, g)), **certify_kw)
        best = min(best, cv.hi)
        yield EABound(step, step, cv, best)
