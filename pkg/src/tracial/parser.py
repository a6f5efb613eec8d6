"""Text syntax for formulas and algebra specifications.

Formula grammar::

    sentence := (("sup" | "inf") IDENT ".")* qf
    qf       := unary ("+" unary)*
    unary    := basic | CONST | SCALAR "." unary | "(" qf ")"
              | ("monus" | "max" | "min") "(" qf "," qf ")"
              | ("abs" | "sqrt") "(" qf ")"
    basic    := ("trRe" | "trIm") "(" term ")" | "d" "(" term "," term ")"
    term     := atom ("*" atom)*
    atom     := IDENT | "0" | "1" | "adj" "(" term ")" | "avg" "(" term "," term ")"
              | SCALAR "." atom | "(" term ")"

Dyadic literals are written ``m/2^e`` (or a bare integer).  A complex
scalar is ``(a/2^k + b/2^k i)``.  Term scalars must have modulus at most
one; formula scalars are real.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .formula import (
    Abs, Add, Adj, Avg, Const, Dist, Formula, FormulaError, Max, Min, Monus,
    Mul, Quant, Scale, Scaled, Sqrt, TConst, Term, TrIm, TrRe, Var,
    bound_vars, free_vars,
)
from .numerics import Dyadic

__all__ = ["SourceSpan", "ParseError", "parse_formula", "format_formula", "format_term",
           "parse_algebra", "parse_term"]

KEYWORDS = {"sup", "inf", "trRe", "trIm", "d", "adj", "avg", "monus", "max", "min", "abs", "sqrt"}


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError("span start after end")


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan, text: str = ""):
        self.span = span
        self.text = text
        super().__init__(f"{message} at {span.start}..{span.end}")


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[().,+*/^@\[\]:-]))")


@dataclass
class _Tok:
    kind: str  # num | ident | sym | eof
    text: str
    start: int
    end: int


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def _tokenize(text: str) -> List[_Tok]:
    toks, pos = [], 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            b = _byte_offset(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}",
                             SourceSpan(b, _byte_offset(text, pos + 1)), text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), _byte_offset(text, start), _byte_offset(text, m.end())))
        pos = m.end()
    end = len(text.encode("utf-8"))
    toks.append(_Tok("eof", "", end, end))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- token plumbing ----------------------------------------------
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[_Tok] = None, start: Optional[int] = None):
        tok = tok or self.tok
        s = tok.start if start is None else start
        return ParseError(msg, SourceSpan(s, max(tok.end, s)), self.text)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "ident") and self.tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    # -- literals ----------------------------------------------------
    def dyadic(self) -> Dyadic:
        start = self.tok.start
        sign = 1
        if self.at("-"):
            self.i += 1
            sign = -1
        if self.tok.kind != "num":
            raise self.error("expected a number", start=start)
        m = int(self.tok.text)
        self.i += 1
        e = 0
        if self.at("/"):
            self.i += 1
            if not (self.tok.kind == "num" and self.tok.text == "2"):
                raise self.error("dyadic denominators are written 2^e")
            self.i += 1
            self.expect("^")
            if self.tok.kind != "num":
                raise self.error("expected an exponent")
            e = int(self.tok.text)
            self.i += 1
        return Dyadic(sign * m, e)

    def _looks_numeric(self) -> bool:
        return self.tok.kind == "num" or (self.at("-") and self.peek().kind == "num")

    def paren_scalar(self, allow_complex: bool) -> Optional[Tuple[Dyadic, Dyadic, int]]:
        """Try ``( a [+|- b i] ) .``; on failure rewind and return None."""
        save = self.i
        start = self.tok.start
        try:
            self.expect("(")
            if self.at("-") and self.peek().kind == "num" or self.tok.kind == "num":
                re_part = self.dyadic()
            else:
                raise self.error("not a scalar")
            im_part = Dyadic(0)
            if self.tok.kind == "ident" and self.tok.text == "i" and allow_complex:
                self.i += 1
                re_part, im_part = Dyadic(0), re_part
            elif self.at("+") or self.at("-"):
                negate = self.at("-")
                self.i += 1
                im_part = self.dyadic()
                if negate:
                    im_part = -im_part
                if not (self.tok.kind == "ident" and self.tok.text == "i"):
                    raise self.error("expected imaginary unit 'i'")
                self.i += 1
            self.expect(")")
            if not self.at("."):
                raise self.error("not a scalar")
        except ParseError:
            self.i = save
            return None
        return re_part, im_part, start

    # -- grammar -----------------------------------------------------
    def sentence(self) -> Formula:
        quants = []
        while self.tok.kind == "ident" and self.tok.text in ("sup", "inf"):
            kind = self.tok.text
            self.i += 1
            if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
                raise self.error("expected a variable name after quantifier")
            name_tok = self.tok
            self.i += 1
            self.expect(".")
            quants.append((kind, name_tok))
        body = self.qf()
        seen = {}
        for kind, tok in quants:
            if tok.text in seen:
                raise ParseError(f"variable {tok.text!r} bound twice", SourceSpan(tok.start, tok.end), self.text)
            seen[tok.text] = tok
        for kind, tok in reversed(quants):
            body = Quant(kind, tok.text, body)
        return body

    def qf(self) -> Formula:
        left = self.unary()
        while self.at("+"):
            self.i += 1
            left = Add(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.tok
        if tok.kind == "ident":
            name = tok.text
            if name in ("sup", "inf"):
                raise self.error("quantifiers are only allowed in the prefix")
            if name in ("trRe", "trIm"):
                self.i += 1
                self.expect("(")
                t = self.term()
                self.expect(")")
                return TrRe(t) if name == "trRe" else TrIm(t)
            if name == "d":
                self.i += 1
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(")")
                return Dist(a, b)
            if name in ("monus", "max", "min"):
                self.i += 1
                self.expect("(")
                a = self.qf()
                self.expect(",")
                b = self.qf()
                self.expect(")")
                return {"monus": Monus, "max": Max, "min": Min}[name](a, b)
            if name in ("abs", "sqrt"):
                self.i += 1
                self.expect("(")
                a = self.qf()
                self.expect(")")
                return Abs(a) if name == "abs" else Sqrt(a)
            raise self.error(f"unexpected identifier {name!r} in formula position")
        if self._looks_numeric():
            start = tok.start
            c = self.dyadic()
            if self.at("."):
                self.i += 1
                return Scaled(c, self.unary())
            return Const(c)
        if self.at("("):
            ps = self.paren_scalar(allow_complex=False)
            if ps is not None:
                re_part, _, _ = ps
                self.expect(".")
                return Scaled(re_part, self.unary())
            self.i += 1
            inner = self.qf()
            self.expect(")")
            return inner
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def term(self) -> Term:
        left = self.atom()
        while self.at("*"):
            self.i += 1
            left = Mul(left, self.atom())
        return left

    def _scale(self, re_part: Dyadic, im_part: Dyadic, start: int) -> Term:
        self.expect(".")
        arg = self.atom()
        try:
            return Scale(re_part, im_part, arg)
        except FormulaError as exc:
            raise ParseError(str(exc), SourceSpan(start, self.toks[self.i - 1].end), self.text) from None

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            name = tok.text
            if name == "adj":
                self.i += 1
                self.expect("(")
                t = self.term()
                self.expect(")")
                return Adj(t)
            if name == "avg":
                self.i += 1
                self.expect("(")
                a = self.term()
                self.expect(",")
                b = self.term()
                self.expect(")")
                return Avg(a, b)
            if name in KEYWORDS:
                raise self.error(f"keyword {name!r} cannot be used as a term")
            self.i += 1
            return Var(name)
        if self._looks_numeric():
            start = tok.start
            c = self.dyadic()
            if self.at("."):
                return self._scale(c, Dyadic(0), start)
            if c == 0:
                return TConst(0)
            if c == 1:
                return TConst(1)
            raise ParseError("term constants are 0 and 1; scalars need '.'",
                             SourceSpan(start, self.toks[self.i - 1].end), self.text)
        if self.at("("):
            ps = self.paren_scalar(allow_complex=True)
            if ps is not None:
                return self._scale(*ps)
            self.i += 1
            inner = self.term()
            self.expect(")")
            return inner
        raise self.error(f"unexpected {tok.text or 'end of input'!r} in term")


def parse_formula(text: str, sentence: bool = False) -> Formula:
    """Parse ``text`` into a :class:`~tracial.formula.Formula`.

    With ``sentence=True`` free variables are rejected.
    """
    p = _Parser(text)
    phi = p.sentence()
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    if sentence:
        free = free_vars(phi)
        if free:
            name = sorted(free)[0]
            m = re.search(r"\b%s\b" % re.escape(name), text)
            s = _byte_offset(text, m.start()) if m else 0
            raise ParseError(f"unbound variable {name!r}", SourceSpan(s, s + len(name.encode())), text)
    names = bound_vars(phi)
    clash = set(names) & set(_free_anywhere(phi))
    if clash:
        name = sorted(clash)[0]
        raise ParseError(f"variable {name!r} used outside its binder", SourceSpan(0, len(text.encode())), text)
    return phi


def _free_anywhere(phi):
    from .formula import _all_free_occurrences
    return _all_free_occurrences(phi)


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    return t


# ---------------------------------------------------------------------------
# printing


def _scalar_text(re_part: Dyadic, im_part: Dyadic) -> str:
    if im_part == 0:
        return f"({re_part})"
    return f"({re_part} + {im_part} i)"


def format_term(t: Term, top: bool = True) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, TConst):
        return str(t.value)
    if isinstance(t, Adj):
        return f"adj({format_term(t.arg)})"
    if isinstance(t, Avg):
        return f"avg({format_term(t.left)}, {format_term(t.right)})"
    if isinstance(t, Scale):
        return f"({_scalar_text(t.re, t.im)} . {format_term(t.arg, top=False)})"
    if isinstance(t, Mul):
        body = f"{format_term(t.left, top=False)} * {format_term(t.right, top=False)}"
        return body if top else f"({body})"
    raise FormulaError(f"not a term: {t!r}")


def format_formula(phi: Formula) -> str:
    """Canonical text; ``parse_formula(format_formula(phi)) == phi``."""
    if isinstance(phi, Quant):
        return f"{phi.kind} {phi.var} . {format_formula(phi.body)}"
    if isinstance(phi, TrRe):
        return f"trRe({format_term(phi.term)})"
    if isinstance(phi, TrIm):
        return f"trIm({format_term(phi.term)})"
    if isinstance(phi, Dist):
        return f"d({format_term(phi.left)}, {format_term(phi.right)})"
    if isinstance(phi, Const):
        return str(phi.value)
    if isinstance(phi, Add):
        return f"({format_formula(phi.left)} + {format_formula(phi.right)})"
    if isinstance(phi, Scaled):
        return f"({phi.coef} . {format_formula(phi.arg)})"
    if isinstance(phi, (Monus, Max, Min)):
        name = type(phi).__name__.lower()
        return f"{name}({format_formula(phi.left)}, {format_formula(phi.right)})"
    if isinstance(phi, Abs):
        return f"abs({format_formula(phi.arg)})"
    if isinstance(phi, Sqrt):
        return f"sqrt({format_formula(phi.arg)})"
    raise FormulaError(f"not a formula: {phi!r}")


# ---------------------------------------------------------------------------
# algebras

_SHORTHAND = re.compile(r"^\s*M\s*(\d+)\s*$")


def parse_algebra(text: str):
    """Parse ``blocks: [n @ w, ...]`` (or the shorthand ``Mn``) into a TracialAlgebra."""
    from .algebra import TracialAlgebra

    m = _SHORTHAND.match(text)
    if m:
        n = int(m.group(1))
        if n < 1:
            raise ParseError("matrix dimension must be positive", SourceSpan(0, len(text.encode())), text)
        return TracialAlgebra([(n, Dyadic(1))])
    p = _Parser(text)
    p.expect("blocks")
    p.expect(":")
    open_tok = p.expect("[")
    blocks = []
    while True:
        start = p.tok.start
        if p.tok.kind != "num":
            raise p.error("expected a block dimension")
        n = int(p.tok.text)
        if n < 1:
            raise p.error("matrix dimension must be positive")
        p.i += 1
        p.expect("@")
        wstart = p.tok.start
        w = p.dyadic()
        if w <= 0:
            raise ParseError("block weights must be positive", SourceSpan(wstart, p.toks[p.i - 1].end), text)
        blocks.append((n, w))
        if p.at(","):
            p.i += 1
            continue
        break
    close_tok = p.expect("]")
    if p.tok.kind != "eof":
        raise p.error(f"trailing input {p.tok.text!r}")
    total = sum((w for _, w in blocks), Dyadic(0))
    if total != 1:
        raise ParseError(f"weights sum to {total}, not 1", SourceSpan(open_tok.start, close_tok.end), text)
    return TracialAlgebra(blocks)
