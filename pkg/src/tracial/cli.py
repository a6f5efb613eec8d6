"""Command-line front end: ``tracial <command> [options]``.

Exit codes: 0 success, 2 malformed input, 3 failed precondition,
4 resource limit (dimension cap or node budget).
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .algebra import AlgebraError, AlgElement, TracialAlgebra, matrix_algebra
from .cep import PreconditionError, build_separation, distinct_values_demo, interpolation_scan
from .evaluate import (BudgetExceeded, CertificationError, CertifiedValue, DimensionCapError,
                       EvaluationError, certify, eval_qf, optimize)
from .evaluate.certify import DEFAULT_CAP, DEFAULT_NODE_BUDGET
from .evaluate.search import DEFAULT_BUDGET
from .formula import Formula, FormulaError, classify, free_vars, is_quantifier_free
from .microstates import DEFAULT_K_MAX, compare_universal, microstate_sequence
from .numerics import Dyadic
from .parallel import WORKERS_ENV, worker_count
from .parser import ParseError, format_formula, parse_algebra, parse_formula
from .presentation import (BallRule, DecodeError, Presentation, PresentationError, WitnessExhausted, decode,
                           encode, good_witness, upper_enumerate_ea)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_RESOURCE = 0, 2, 3, 4


class InputError(ValueError):
    """Malformed command-line input (exit code 2)."""


def _read(text: str) -> str:
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return fh.read().strip()
    return text


def _lenient_dyadic(text: str) -> Dyadic:
    """``m/2^e``, or any exact dyadic such as ``1/2``, ``3`` or ``0.25``."""
    text = text.strip()
    try:
        return Dyadic.parse(text)
    except ValueError:
        pass
    try:
        return Dyadic.from_fraction(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"malformed dyadic {text!r}; expected m/2^e") from None


def _dyadic(text: str) -> Dyadic:
    try:
        return _lenient_dyadic(text)
    except ValueError as e:
        raise InputError(str(e)) from None


def _entry(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(p, (int, float)) for p in v):
        return complex(v[0], v[1])
    raise InputError(f"matrix entry {v!r} is neither a number nor a [re, im] pair")


def element_from_json(A: TracialAlgebra, data) -> AlgElement:
    """A single-block matrix ``[[...], ...]`` or ``{"blocks": [matrix, ...]}``."""
    mats = data["blocks"] if isinstance(data, dict) else [data]
    try:
        blocks = [np.array([[_entry(v) for v in row] for row in m], dtype=complex) for m in mats]
        return AlgElement(A, blocks)
    except (TypeError, AlgebraError) as e:
        raise InputError(f"bad element for {A}: {e}") from None


def _json(text: str):
    try:
        return json.loads(_read(text))
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON: {e}") from None


def _assignment(A: TracialAlgebra, items: Sequence[str]) -> Dict[str, AlgElement]:
    out = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise InputError(f"--assign expects name=JSON, got {item!r}")
        out[name.strip()] = element_from_json(A, _json(value))
    return out


def _presentation(text: str) -> Presentation:
    """A hex Goedel code, or JSON ``{"algebra", "generators", "arity", "rule_seed"}``."""
    raw = _read(text)
    if raw.startswith("{"):
        data = _json(raw)
        A = parse_algebra(data["algebra"])
        arity = int(data.get("arity", 1))
        gens = []
        for g in data.get("generators", []):
            g = g if arity > 1 else [g]
            gens.append(tuple(element_from_json(A, x) for x in g))
        seed = data.get("rule_seed")
        return Presentation(A, gens, arity, BallRule(int(seed)) if seed is not None else None)
    try:
        return decode(bytes.fromhex(raw))
    except ValueError as e:
        if isinstance(e, DecodeError):
            raise
        raise InputError(f"presentation is neither JSON nor hex: {e}") from None


class Report:
    def __init__(self, command: str, config: Dict[str, str]):
        self.command = command
        self.config = config
        self.records: List[Dict[str, str]] = []

    def add(self, **fields):
        self.records.append({k: str(v) for k, v in fields.items()})

    def text(self) -> str:
        lines = [f"# tracial {__version__}", f"# command: {self.command}"]
        lines += [f"# {k}: {v}" for k, v in self.config.items()]
        for rec in self.records:
            lines.append(" ".join(f"{k}={v}" for k, v in rec.items()))
        return "\n".join(lines) + "\n"

    def json(self) -> str:
        return json.dumps({"version": __version__, "command": self.command, "config": self.config,
                           "records": self.records}, indent=2) + "\n"


def _iv(iv) -> str:
    return f"[{iv.lo},{iv.hi}]"


def _cv_fields(cv: CertifiedValue) -> Dict[str, object]:
    return {"interval": _iv(cv.interval), "lo": repr(cv.lo), "hi": repr(cv.hi),
            "certified": "yes" if cv.certified else "no"}


def _sentence(args) -> Formula:
    return parse_formula(_read(args.formula))


def _certify_kw(args) -> Dict[str, object]:
    return {"cap": args.cap, "node_budget": args.node_budget, "search_budget": args.search_budget,
            "seed": args.seed}


def cmd_eval(args, rep: Report):
    A = parse_algebra(_read(args.algebra))
    phi = _sentence(args)
    asg = _assignment(A, args.assign)
    if is_quantifier_free(phi):
        rep.add(value=repr(eval_qf(A, phi, asg)))
    else:
        cv = optimize(A, phi, args.search_budget, seed=args.seed, assignment=asg)
        rep.add(best=repr(cv.witness_value), **_cv_fields(cv))


def cmd_certify(args, rep: Report):
    A = parse_algebra(_read(args.algebra))
    cv = certify(A, _sentence(args), args.eps, assignment=_assignment(A, args.assign), **_certify_kw(args))
    rep.add(**_cv_fields(cv), witness_value=repr(cv.witness_value))


def cmd_microstates(args, rep: Report):
    sigma = _sentence(args)
    kw = _certify_kw(args)
    if args.compare:
        cmp_ = compare_universal(sigma, parse_algebra(_read(args.compare)), args.k_max, args.eps, **kw)
        report = cmp_.report
    else:
        cmp_, report = None, microstate_sequence(sigma, args.k_max, args.eps, **kw)
    for lv in report.levels:
        rep.add(k=lv.k, n=lv.n, interval=_iv(lv.value.interval), tag=lv.tag)
    label, value = report.bound
    rep.add(monotone="yes" if report.monotone else "no", bound=repr(value), meaning=label.replace(" ", "_"))
    if cmp_ is not None:
        rep.add(algebra_interval=_iv(cmp_.value.interval), verdict=cmp_.verdict)


def _grid(text: str) -> List[Dyadic]:
    pts = [_dyadic(p) for p in text.split(",") if p.strip()]
    if not pts or any(p < 0 or p > 1 for p in pts):
        raise InputError("grid points must lie in [0, 1]")
    return pts


def cmd_interpolate(args, rep: Report):
    sigma = _sentence(args)
    B, A = parse_algebra(_read(args.B)), parse_algebra(_read(args.A))
    if args.distinct:
        rows = distinct_values_demo(sigma, B, A, args.distinct, args.eps, **_certify_kw(args))
    else:
        rows = interpolation_scan(sigma, B, A, _grid(args.grid), args.eps, **_certify_kw(args))
    for t, cv in rows:
        rep.add(t=t, **_cv_fields(cv))


def _is_scalar(v) -> bool:
    return isinstance(v, (int, float)) or (
        isinstance(v, list) and len(v) == 2 and all(isinstance(p, (int, float)) for p in v))


def _is_matrix(data) -> bool:
    """A square list of rows of numbers or [re, im] pairs (as opposed to a list of elements)."""
    return all(isinstance(r, list) and len(r) == len(data) and all(map(_is_scalar, r)) for r in data)


def cmd_separation(args, rep: Report):
    A = parse_algebra(_read(args.algebra))
    data = _json(args.tuple)
    if not isinstance(data, list) or not data:
        raise InputError("--tuple expects a non-empty JSON list of elements")
    if _is_matrix(data):
        data = [data]  # a single matrix
    a = [element_from_json(A, x) for x in data]
    sep = build_separation(args.N, A, a)
    rep.add(formula=format_formula(sep.formula).replace(" ", ""))
    for text in args.on or [args.algebra]:
        target = parse_algebra(_read(text))
        cv = sep.certify(target, args.eps, **_certify_kw(args))
        rep.add(algebra=str(target).replace(" ", ""), **_cv_fields(cv))


def cmd_witness(args, rep: Report):
    P = _presentation(args.presentation)
    N = good_witness(encode(P), _sentence(args), args.eps, **_certify_kw(args))
    rep.add(code_bytes=len(encode(P)), witness=N)


def cmd_enumerate_ea(args, rep: Report):
    P = _presentation(args.presentation)
    for b in upper_enumerate_ea(P, _sentence(args), args.eps, args.steps, **_certify_kw(args)):
        rep.add(step=b.step, bound=b.inner.interval.hi, running_min=repr(b.running_min),
                certified="yes" if b.inner.certified else "no")


COMMANDS = {
    "eval": cmd_eval, "certify": cmd_certify, "microstates": cmd_microstates,
    "interpolate": cmd_interpolate, "separation": cmd_separation, "witness": cmd_witness,
    "enumerate-ea": cmd_enumerate_ea,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=_dyadic_arg, default=Dyadic(1, 4), help="target width, m/2^e")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest branched real dimension")
    common.add_argument("--node-budget", type=int, default=DEFAULT_NODE_BUDGET)
    common.add_argument("--search-budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--json", action="store_true", help="emit JSON instead of text")
    p = argparse.ArgumentParser(prog="tracial", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    formula_help = "formula text, or @path to read it from a file"

    s = sub.add_parser("eval", parents=[common], help="evaluate a formula (heuristically if quantified)")
    s.add_argument("--formula", required=True, help=formula_help)
    s.add_argument("--algebra", required=True)
    s.add_argument("--assign", action="append", metavar="NAME=JSON")

    s = sub.add_parser("certify", parents=[common], help="certified interval for a sentence")
    s.add_argument("--formula", required=True, help=formula_help)
    s.add_argument("--algebra", required=True)
    s.add_argument("--assign", action="append", metavar="NAME=JSON")

    s = sub.add_parser("microstates", parents=[common], help="values along M_1, M_2, M_4, ...")
    s.add_argument("--formula", required=True, help=formula_help)
    s.add_argument("--k-max", type=int, default=DEFAULT_K_MAX)
    s.add_argument("--compare", metavar="ALGEBRA", help="also compare against this algebra")

    s = sub.add_parser("interpolate", parents=[common], help="scan tB + (1-t)A")
    s.add_argument("--formula", required=True, help=formula_help)
    s.add_argument("--B", required=True)
    s.add_argument("--A", required=True)
    s.add_argument("--grid", default="0,1/2^1,1")
    s.add_argument("--distinct", type=int, metavar="COUNT", help="select pairwise disjoint values instead")

    s = sub.add_parser("separation", parents=[common], help="build and certify a separation sentence")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--algebra", required=True)
    s.add_argument("--tuple", required=True, help="JSON list of elements (or one matrix)")
    s.add_argument("--on", action="append", metavar="ALGEBRA", help="algebras to certify on")

    for name, helptext in (("witness", "good-witness index for a universal sentence"),
                           ("enumerate-ea", "upper bounds for an exists-forall sentence")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--formula", required=True, help=formula_help)
        s.add_argument("--presentation", required=True, help="JSON description or hex code (or @path)")
        if name == "enumerate-ea":
            s.add_argument("--steps", type=int, default=8)
    return p


def _dyadic_arg(text: str) -> Dyadic:
    try:
        d = _lenient_dyadic(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if d <= 0:
        raise argparse.ArgumentTypeError("eps must be positive")
    return d


def _config(args) -> Dict[str, str]:
    skip = {"command", "output", "json"}
    fmt = lambda v: ",".join(map(str, v)) if isinstance(v, list) else str(v)
    return {k: fmt(v) for k, v in sorted(vars(args).items()) if k not in skip and v is not None} | {
        "workers": str(worker_count())}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    rep = Report(args.command, _config(args))
    try:
        COMMANDS[args.command](args, rep)
    except (ParseError, InputError, DecodeError, json.JSONDecodeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (DimensionCapError, BudgetExceeded) as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FormulaError, AlgebraError, EvaluationError, PreconditionError, PresentationError,
            CertificationError, ValueError) as e:
        print(f"precondition failed: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    out = rep.json() if args.json else rep.text()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
