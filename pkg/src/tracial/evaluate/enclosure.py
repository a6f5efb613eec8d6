"""Dimension-free range enclosures for formulas over the unit ball.

Every term is expanded, block by block, into a noncommutative polynomial
in the *letters* (the unconstrained variables and their adjoints) whose
coefficients are the block matrices of the fixed variables.  In a block
of size one the letters commute and the polynomial is kept in commutative
normal form.  Exact cancellation happens during expansion, so for
instance ``d(x*y, y*x)`` vanishes identically on abelian summands.

Each monomial class is then bounded separately:

* constant part: evaluated exactly;
* scalar coefficient ``c`` on a word ``w``: ``|tr(c w)| <= |c|`` and
  ``||c w||_2 <= |c|``; if ``w`` is cyclically of the form ``u u^*`` its
  trace lies in ``c * [0, 1]``;
* matrix coefficients, one letter: the linear map ``y -> sum A_k y B_k``
  is bounded by the largest singular value of ``sum B_k^T (x) A_k``, and
  the trace functional by a normalized nuclear norm;
* matrix coefficients, several letters: Hoelder bounds, one coefficient
  in the 2-norm (or, for traces, the trace norm after cyclically merging
  the outer coefficients) and all others in the operator norm.

Traces and 2-norms are assembled over blocks with the algebra weights and
pushed through the connectives with interval arithmetic.  The result is
a sound enclosure of the formula's values over all unit-ball values of
the letters; it ignores correlations between different basic formulas.
"""
from __future__ import annotations

import math
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..algebra import AlgElement, TracialAlgebra
from ..formula import (
    Abs, Add, Adj, Avg, Const, Dist, Formula, FormulaError, Max, Min, Monus,
    Mul, Quant, Scale, Scaled, Sqrt, TConst, Term, TrIm, TrRe, Var,
    bounds as formula_bounds, free_vars,
)

__all__ = ["enclose", "active_letters", "BlockPoly"]

Letter = Tuple[str, bool]
Entry = Tuple[np.ndarray, ...]
_SAFETY = 1e-12


def _is_scalar(m: np.ndarray) -> bool:
    n = m.shape[0]
    if n == 1:
        return True
    d = m[0, 0]
    return bool(np.all(m == d * np.eye(n)))


def _holder(mats: List[np.ndarray], n: int, trace: bool) -> float:
    """``min_j |C_j|_p * prod_{k != j} |C_k|_op`` with ``p = 1`` for traces, ``2`` otherwise."""
    ops = [float(np.linalg.norm(m, 2)) for m in mats]
    if trace:
        special = [float(np.sum(np.linalg.svd(m, compute_uv=False))) / n for m in mats]
    else:
        special = [float(np.linalg.norm(m)) / math.sqrt(n) for m in mats]
    best = math.prod(ops)
    for j in range(len(mats)):
        best = min(best, special[j] * math.prod(ops[:j] + ops[j + 1:]))
    return best


def _merge_sides(entries: List[Entry], side: int) -> List[Entry]:
    """Combine one-letter entries ``A y B`` that share the coefficient on ``side`` (0 left, 1 right)."""
    groups: List[List[np.ndarray]] = []
    for e in entries:
        for g in groups:
            if np.array_equal(g[0][side], e[side]):
                g.append(e)
                break
        else:
            groups.append([e])
    other = 1 - side
    out = []
    for g in groups:
        merged = [None, None]
        merged[side] = g[0][side]
        merged[other] = sum(e[other] for e in g)
        out.append(tuple(merged))
    return out


class BlockPoly:
    """Polynomial ``sum_skel sum_entries C0 l1 C1 ... lm Cm`` on one block."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Optional[Dict[Tuple[Letter, ...], List[Entry]]] = None):
        self.n = n
        self.terms = terms or {}

    @property
    def commutative(self) -> bool:
        return self.n == 1

    def _key(self, skel):
        return tuple(sorted(skel)) if self.commutative else tuple(skel)

    @classmethod
    def constant(cls, n: int, m: np.ndarray) -> "BlockPoly":
        p = cls(n, {(): [(np.asarray(m, complex),)]})
        return p.canonical()

    @classmethod
    def letter(cls, n: int, name: str) -> "BlockPoly":
        eye = np.eye(n, dtype=complex)
        return cls(n, {((name, False),): [(eye, eye)]})

    def canonical(self) -> "BlockPoly":
        out = {}
        eye = np.eye(self.n, dtype=complex)
        for skel, entries in self.terms.items():
            if not entries:
                continue
            if not skel:
                total = sum(e[0] for e in entries)
                if np.any(total != 0):
                    out[skel] = [(total,)]
                continue
            scal = [e for e in entries if all(_is_scalar(m) for m in e)]
            if len(scal) == len(entries):
                c = sum(complex(np.prod([m[0, 0] for m in e])) for e in entries)
                if c != 0:
                    out[skel] = [(c * eye,) + (eye,) * len(skel)]
                continue
            mixed = [e for e in entries if not all(_is_scalar(m) for m in e)]
            c = sum(complex(np.prod([m[0, 0] for m in e])) for e in scal)
            if c != 0:
                mixed.append((c * eye,) + (eye,) * len(skel))
            out[skel] = mixed
        return BlockPoly(self.n, out)

    def __add__(self, other: "BlockPoly") -> "BlockPoly":
        terms = {k: list(v) for k, v in self.terms.items()}
        for k, v in other.terms.items():
            terms.setdefault(k, []).extend(v)
        return BlockPoly(self.n, terms).canonical()

    def scale(self, lam: complex) -> "BlockPoly":
        return BlockPoly(self.n, {k: [(lam * e[0],) + e[1:] for e in v]
                                  for k, v in self.terms.items()}).canonical()

    def __mul__(self, other: "BlockPoly") -> "BlockPoly":
        terms: Dict = {}
        for s1, e1s in self.terms.items():
            for s2, e2s in other.terms.items():
                key = self._key(s1 + s2)
                bucket = terms.setdefault(key, [])
                for e1 in e1s:
                    for e2 in e2s:
                        bucket.append(e1[:-1] + (e1[-1] @ e2[0],) + e2[1:])
        return BlockPoly(self.n, terms).canonical()

    def adjoint(self) -> "BlockPoly":
        terms: Dict = {}
        for skel, entries in self.terms.items():
            key = self._key(tuple((v, not s) for v, s in reversed(skel)))
            bucket = terms.setdefault(key, [])
            for e in entries:
                bucket.append(tuple(m.conj().T for m in reversed(e)))
        return BlockPoly(self.n, terms).canonical()

    # -- bounds ------------------------------------------------------
    def _positive_word(self, skel) -> bool:
        if self.commutative:
            counts: Dict[str, int] = {}
            for v, s in skel:
                counts[v] = counts.get(v, 0) + (1 if s else -1)
            return all(c == 0 for c in counts.values())
        k = len(skel)
        if k % 2:
            return False
        for r in range(k):
            w = skel[r:] + skel[:r]
            u = w[: k // 2]
            if w[k // 2:] == tuple((v, not s) for v, s in reversed(u)):
                return True
        return False

    def trace_rect(self) -> Tuple[float, float, float, float]:
        """Enclosure of the normalized trace as ``(re_lo, re_hi, im_lo, im_hi)``."""
        n = self.n
        re_lo = re_hi = im_lo = im_hi = 0.0
        for skel, entries in self.terms.items():
            if not skel:
                c = complex(np.trace(entries[0][0])) / n
                re_lo += c.real
                re_hi += c.real
                im_lo += c.imag
                im_hi += c.imag
                continue
            if len(entries) == 1 and all(_is_scalar(m) for m in entries[0]):
                c = complex(entries[0][0][0, 0])
                if self._positive_word(skel):
                    re_lo += min(0.0, c.real)
                    re_hi += max(0.0, c.real)
                    im_lo += min(0.0, c.imag)
                    im_hi += max(0.0, c.imag)
                else:
                    r = abs(c)
                    re_lo -= r
                    re_hi += r
                    im_lo -= r
                    im_hi += r
                continue
            if len(skel) == 1:
                g = sum(e[1] @ e[0] for e in entries)
                r = float(np.sum(np.linalg.svd(g, compute_uv=False))) / n
            else:
                # tr(C0 l1 ... lm Cm) = tr((Cm C0) l1 C1 ... lm)
                r = sum(_holder([e[-1] @ e[0]] + list(e[1:-1]), n, True) for e in entries)
            re_lo -= r
            re_hi += r
            im_lo -= r
            im_hi += r
        s = _SAFETY
        return re_lo - s, re_hi + s, im_lo - s, im_hi + s

    def norm_bounds(self) -> Tuple[float, float]:
        """Enclosure of the normalized 2-norm of the polynomial's value."""
        n = self.n
        const = 0.0
        rest = 0.0
        for skel, entries in self.terms.items():
            if not skel:
                m = entries[0][0]
                const = math.sqrt(float(np.vdot(m, m).real) / n)
            elif len(entries) == 1 and all(_is_scalar(m) for m in entries[0]):
                rest += abs(complex(entries[0][0][0, 0]))
            else:
                r = sum(_holder(list(e), n, False) for e in entries)
                if len(skel) == 1:
                    k = sum(np.kron(e[1].T, e[0]) for e in entries)
                    r = min(r, float(np.linalg.norm(k, 2)),
                            sum(_holder(list(e), n, False) for e in _merge_sides(entries, 1)),
                            sum(_holder(list(e), n, False) for e in _merge_sides(entries, 0)))
                rest += r
        lo = max(0.0, const - rest - _SAFETY)
        return lo, const + rest + _SAFETY


class _Encloser:
    def __init__(self, A: TracialAlgebra, fixed: Mapping[str, AlgElement]):
        self.A = A
        self.fixed = fixed
        self.cache: Dict = {}

    def poly(self, t: Term, i: int) -> BlockPoly:
        key = (id(t), i)
        hit = self.cache.get(key)
        if hit is not None:
            return hit[1]
        n = self.A.dims[i]
        if isinstance(t, Var):
            if t.name in self.fixed:
                out = BlockPoly.constant(n, self.fixed[t.name].blocks[i])
            else:
                out = BlockPoly.letter(n, t.name)
        elif isinstance(t, TConst):
            out = BlockPoly.constant(n, np.eye(n) * t.value)
        elif isinstance(t, Adj):
            out = self.poly(t.arg, i).adjoint()
        elif isinstance(t, Scale):
            out = self.poly(t.arg, i).scale(t.value)
        elif isinstance(t, Mul):
            out = self.poly(t.left, i) * self.poly(t.right, i)
        elif isinstance(t, Avg):
            out = (self.poly(t.left, i) + self.poly(t.right, i)).scale(0.5)
        else:
            raise FormulaError(f"not a term: {t!r}")
        self.cache[key] = (t, out)
        return out

    def trace(self, t: Term) -> Tuple[float, float, float, float]:
        acc = [0.0, 0.0, 0.0, 0.0]
        for i, (n, w) in enumerate(self.A.blocks):
            rect = self.poly(t, i).trace_rect()
            for j in range(4):
                acc[j] += float(w) * rect[j]
        return tuple(acc)

    def formula(self, phi: Formula) -> Tuple[float, float]:
        lo, hi = self._formula(phi)
        m, M = formula_bounds(phi)
        return max(lo, m), min(hi, M)

    def _formula(self, phi: Formula) -> Tuple[float, float]:
        if isinstance(phi, TrRe):
            r = self.trace(phi.term)
            return max(r[0], -1.0), min(r[1], 1.0)
        if isinstance(phi, TrIm):
            r = self.trace(phi.term)
            return max(r[2], -1.0), min(r[3], 1.0)
        if isinstance(phi, Dist):
            lo2 = hi2 = 0.0
            for i, (n, w) in enumerate(self.A.blocks):
                p = self.poly(phi.left, i) + self.poly(phi.right, i).scale(-1.0)
                lo, hi = p.norm_bounds()
                hi = min(hi, 2.0)
                lo = min(lo, hi)
                lo2 += float(w) * lo * lo
                hi2 += float(w) * hi * hi
            return math.sqrt(lo2) * (1 - _SAFETY), min(math.sqrt(hi2) + _SAFETY, 2.0)
        if isinstance(phi, Const):
            v = float(phi.value)
            return v, v
        if isinstance(phi, Add):
            a, b = self.formula(phi.left), self.formula(phi.right)
            return a[0] + b[0], a[1] + b[1]
        if isinstance(phi, Scaled):
            c = float(phi.coef)
            lo, hi = self.formula(phi.arg)
            return (c * lo, c * hi) if c >= 0 else (c * hi, c * lo)
        if isinstance(phi, Monus):
            a, b = self.formula(phi.left), self.formula(phi.right)
            return max(a[0] - b[1], 0.0), max(a[1] - b[0], 0.0)
        if isinstance(phi, Max):
            a, b = self.formula(phi.left), self.formula(phi.right)
            return max(a[0], b[0]), max(a[1], b[1])
        if isinstance(phi, Min):
            a, b = self.formula(phi.left), self.formula(phi.right)
            return min(a[0], b[0]), min(a[1], b[1])
        if isinstance(phi, Abs):
            lo, hi = self.formula(phi.arg)
            if lo >= 0:
                return lo, hi
            if hi <= 0:
                return -hi, -lo
            return 0.0, max(-lo, hi)
        if isinstance(phi, Sqrt):
            lo, hi = self.formula(phi.arg)
            return math.sqrt(max(lo, 0.0)), math.sqrt(max(hi, 0.0))
        if isinstance(phi, Quant):
            # a quantified variable ranges over the ball like any letter
            return self.formula(phi.body)
        raise FormulaError(f"not a formula: {phi!r}")


def enclose(A: TracialAlgebra, phi: Formula,
            fixed: Optional[Mapping[str, AlgElement]] = None) -> Tuple[float, float]:
    """Interval containing every value of ``phi`` as its unfixed variables range over the ball.

    Variables in ``fixed`` are held at the given elements; every other
    variable (free or bound) is a letter.
    """
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(free_vars(phi))
    for name in unknown:
        fixed.pop(name)
    return _Encloser(A, fixed).formula(phi)


def active_letters(A: TracialAlgebra, phi: Formula,
                   fixed: Optional[Mapping[str, AlgElement]] = None) -> set:
    """Unfixed variables that survive exact expansion of some basic formula of ``phi``.

    A variable missing from the result does not influence the value, as in
    ``trRe(0 * y)`` or ``d(x * y, y * x)`` on an abelian algebra.
    """
    fixed = {k: v for k, v in (fixed or {}).items() if k in free_vars(phi)}
    enc = _Encloser(A, fixed)
    out: set = set()

    def visit(f):
        if isinstance(f, (TrRe, TrIm)):
            polys = [enc.poly(f.term, i) for i in range(len(A.dims))]
        elif isinstance(f, Dist):
            polys = [enc.poly(f.left, i) + enc.poly(f.right, i).scale(-1.0) for i in range(len(A.dims))]
        else:
            for child in (getattr(f, a) for a in ("arg", "left", "right", "body") if hasattr(f, a)):
                visit(child)
            return
        for p in polys:
            for skel in p.terms:
                out.update(v for v, _ in skel)

    visit(phi)
    return out
