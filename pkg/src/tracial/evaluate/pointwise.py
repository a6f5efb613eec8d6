"""Batched evaluation of terms and quantifier-free formulas.

Elements are handled as per-block arrays with a leading batch axis,
``(B, n, n)``; a batch axis of length 1 broadcasts.  The single-element
API (:func:`eval_term`, :func:`eval_qf`) wraps the batched one.
"""
from __future__ import annotations

from typing import Dict, Mapping, Tuple

import numpy as np

from ..algebra import AlgElement, AlgebraError, TracialAlgebra, in_unit_ball
from ..formula import (
    Abs, Add, Adj, Avg, Const, Dist, Formula, FormulaError, Max, Min, Monus,
    Mul, Quant, Scale, Scaled, Sqrt, TConst, Term, TrIm, TrRe, Var,
    free_vars, term_vars,
)

__all__ = ["Blocks", "batch_term", "batch_trace", "batch_qf", "eval_term", "eval_qf",
           "stack_assignment", "EvaluationError"]

Blocks = Tuple[np.ndarray, ...]


class EvaluationError(ValueError):
    pass


def batch_trace(A: TracialAlgebra, x: Blocks) -> np.ndarray:
    out = 0
    for (n, w), b in zip(A.blocks, x):
        out = out + (float(w) / n) * np.trace(b, axis1=-2, axis2=-1)
    return np.asarray(out)


def _hs_sq(A: TracialAlgebra, x: Blocks) -> np.ndarray:
    out = 0
    for (n, w), b in zip(A.blocks, x):
        out = out + (float(w) / n) * np.sum(b.real ** 2 + b.imag ** 2, axis=(-2, -1))
    return np.asarray(out)


def batch_term(A: TracialAlgebra, t: Term, env: Mapping[str, Blocks], cache=None) -> Blocks:
    """Evaluate ``t`` with variables bound to stacked block arrays."""
    if cache is None:
        cache = {}
    key = id(t)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(t, Var):
        try:
            out = env[t.name]
        except KeyError:
            raise EvaluationError(f"no value for variable {t.name!r}") from None
    elif isinstance(t, TConst):
        out = tuple((np.eye(n, dtype=complex) if t.value else np.zeros((n, n), complex))[None]
                    for n in A.dims)
    elif isinstance(t, Adj):
        a = batch_term(A, t.arg, env, cache)
        out = tuple(np.conj(np.swapaxes(b, -1, -2)) for b in a)
    elif isinstance(t, Scale):
        lam = t.value
        out = tuple(lam * b for b in batch_term(A, t.arg, env, cache))
    elif isinstance(t, Mul):
        a = batch_term(A, t.left, env, cache)
        b = batch_term(A, t.right, env, cache)
        out = tuple(p @ q for p, q in zip(a, b))
    elif isinstance(t, Avg):
        a = batch_term(A, t.left, env, cache)
        b = batch_term(A, t.right, env, cache)
        out = tuple((p + q) * 0.5 for p, q in zip(a, b))
    else:
        raise FormulaError(f"not a term: {t!r}")
    cache[key] = (t, out)  # keep t alive so its id stays unique
    return out


def batch_qf(A: TracialAlgebra, phi: Formula, env: Mapping[str, Blocks], cache=None) -> np.ndarray:
    """Values of a quantifier-free formula; shape is the broadcast batch shape."""
    if cache is None:
        cache = {}
    if isinstance(phi, TrRe):
        return batch_trace(A, batch_term(A, phi.term, env, cache)).real
    if isinstance(phi, TrIm):
        return batch_trace(A, batch_term(A, phi.term, env, cache)).imag
    if isinstance(phi, Dist):
        a = batch_term(A, phi.left, env, cache)
        b = batch_term(A, phi.right, env, cache)
        return np.sqrt(_hs_sq(A, tuple(p - q for p, q in zip(a, b))))
    if isinstance(phi, Const):
        return np.asarray(float(phi.value))
    if isinstance(phi, Add):
        return batch_qf(A, phi.left, env, cache) + batch_qf(A, phi.right, env, cache)
    if isinstance(phi, Scaled):
        return float(phi.coef) * batch_qf(A, phi.arg, env, cache)
    if isinstance(phi, Monus):
        return np.maximum(batch_qf(A, phi.left, env, cache) - batch_qf(A, phi.right, env, cache), 0.0)
    if isinstance(phi, Max):
        return np.maximum(batch_qf(A, phi.left, env, cache), batch_qf(A, phi.right, env, cache))
    if isinstance(phi, Min):
        return np.minimum(batch_qf(A, phi.left, env, cache), batch_qf(A, phi.right, env, cache))
    if isinstance(phi, Abs):
        return np.abs(batch_qf(A, phi.arg, env, cache))
    if isinstance(phi, Sqrt):
        return np.sqrt(np.maximum(batch_qf(A, phi.arg, env, cache), 0.0))
    if isinstance(phi, Quant):
        raise FormulaError("quantifier inside a formula evaluated pointwise")
    raise FormulaError(f"not a formula: {phi!r}")


def stack_assignment(A: TracialAlgebra, asg: Mapping[str, AlgElement]) -> Dict[str, Blocks]:
    env = {}
    for name, x in asg.items():
        if not isinstance(x, AlgElement):
            raise EvaluationError(f"value for {name!r} is not an algebra element")
        if x.algebra != A:
            raise AlgebraError(f"value for {name!r} lives in {x.algebra}, not {A}")
        env[name] = tuple(b[None] for b in x.blocks)
    return env


def _check_assignment(A, needed, asg, tol=1e-9):
    missing = sorted(set(needed) - set(asg))
    if missing:
        raise EvaluationError(f"no value for variables {missing}")
    for name in needed:
        if not in_unit_ball(A, asg[name], tol):
            raise EvaluationError(f"value for {name!r} is outside the unit ball")


def eval_term(A: TracialAlgebra, t: Term, asg: Mapping[str, AlgElement]) -> AlgElement:
    _check_assignment(A, term_vars(t), asg)
    env = stack_assignment(A, {k: asg[k] for k in term_vars(t)})
    blocks = batch_term(A, t, env)
    return AlgElement(A, [np.broadcast_to(b, (1, n, n))[0] for b, n in zip(blocks, A.dims)])


def eval_qf(A: TracialAlgebra, phi: Formula, asg: Mapping[str, AlgElement]) -> float:
    """Truth value of a quantifier-free formula at an assignment."""
    if isinstance(phi, Quant) or any(isinstance(n, Quant) for n in _nodes(phi)):
        raise FormulaError("eval_qf needs a quantifier-free formula")
    names = free_vars(phi)
    _check_assignment(A, names, asg)
    env = stack_assignment(A, {k: asg[k] for k in names})
    return float(np.reshape(batch_qf(A, phi, env), -1)[0])


def _nodes(phi):
    yield phi
    for attr in ("left", "right", "arg", "body"):
        child = getattr(phi, attr, None)
        if isinstance(child, Formula):
            yield from _nodes(child)
