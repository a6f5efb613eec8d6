"""Heuristic witness search over unit-ball tuples.

Multi-start projected gradient ascent: starting points come from caller
hints, a few structured elements (scalars, the identity) and seeded
random unitaries and ball samples; gradients are central finite
differences evaluated in one batch; every iterate is projected back to
the ball by clipping singular values.
"""
from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from ..algebra import AlgElement, TracialAlgebra, random_unit_ball, random_unitary
from ..formula import Formula, FormulaError, SentenceClass, bounds, prefix, free_vars, is_quantifier_free
from ..numerics import interval_hull
from .layout import Layout
from .pointwise import batch_qf, stack_assignment
from .result import CertifiedValue

__all__ = ["optimize", "maximize", "DEFAULT_BUDGET"]

DEFAULT_BUDGET = 40_000


def _structured(A: TracialAlgebra, names, rng) -> List[Dict[str, AlgElement]]:
    one = A.identity()
    scalars = [one, A.zero(), one.scale(-1), one.scale(1j), one.scale(-1j)]
    out = [{v: s for v in names} for s in scalars]
    # mixed scalar tuples
    for k in range(min(8, 2 ** len(names))):
        out.append({v: scalars[int(rng.integers(len(scalars)))] for v in names})
    return out


def maximize(A: TracialAlgebra, names: Sequence[str], objective, *, budget: int = DEFAULT_BUDGET,
             seed: int = 0, hints: Sequence[Mapping[str, AlgElement]] = ()):
    """Maximize ``objective(env) -> (B,)`` over unit-ball tuples for ``names``.

    Returns ``(best_value, best_theta, layout, evaluations)``.
    """
    if budget <= 0:
        raise ValueError("search budget must be positive")
    lay = Layout(A, names)
    D = lay.D
    rng = np.random.default_rng(seed)

    def f(theta):
        vals = np.asarray(objective(lay.to_env(theta)), dtype=float)
        return np.broadcast_to(vals, (theta.shape[0],)).copy()

    pool = list(hints) + _structured(A, names, rng)
    n_random = max(16, min(256, budget // (40 * (2 * D + 2))))
    seeds = rng.integers(0, 2 ** 63, size=2 * n_random)
    for k in range(n_random):
        maker = random_unitary if k % 2 == 0 else random_unit_ball
        pool.append({v: maker(A, int(seeds[2 * k + j % 2]) + j) for j, v in enumerate(names)})
    theta0 = lay.project(lay.from_elements(pool))
    vals0 = f(theta0)
    evals = len(pool)

    per_start_iter = 2 * D + 3
    n_starts = int(np.clip(budget // (per_start_iter * 60), 2, 16))
    order = np.argsort(-vals0, kind="stable")
    starts = theta0[order[:n_starts]]
    vals = vals0[order[:n_starts]]
    best_i = int(order[0])
    best_val, best_theta = float(vals0[best_i]), theta0[best_i].copy()

    steps = np.full(n_starts, 0.25)
    h = 1e-6
    eye = np.eye(D)
    max_iter = max(1, (budget - evals) // (n_starts * per_start_iter))
    x = starts.copy()
    for _ in range(max_iter):
        plus = (x[:, None, :] + h * eye[None]).reshape(-1, D)
        minus = (x[:, None, :] - h * eye[None]).reshape(-1, D)
        fp = f(plus).reshape(n_starts, D)
        fm = f(minus).reshape(n_starts, D)
        grad = (fp - fm) / (2 * h)
        gnorm = np.linalg.norm(grad, axis=1, keepdims=True)
        direction = np.where(gnorm > 1e-12, grad / np.maximum(gnorm, 1e-300), 0.0)
        trial = lay.project(x + steps[:, None] * direction)
        ft = f(trial)
        evals += n_starts * (2 * D + 1)
        better = ft > vals
        x = np.where(better[:, None], trial, x)
        vals = np.where(better, ft, vals)
        steps = np.where(better, np.minimum(steps * 1.5, 1.0), steps * 0.5)
        # restart stalled starts with a random perturbation of the current best
        stalled = steps < 1e-9
        if np.any(stalled):
            k = int(stalled.sum())
            noise = rng.standard_normal((k, D)) * 0.1
            x[stalled] = lay.project(best_theta[None] + noise)
            vals[stalled] = f(x[stalled])
            steps[stalled] = 0.25
            evals += k
        top = int(np.argmax(vals))
        if vals[top] > best_val:
            best_val, best_theta = float(vals[top]), x[top].copy()
        if evals >= budget:
            break
    return best_val, best_theta, lay, evals


def _split(sigma: Formula):
    quants, matrix = prefix(sigma)
    if not is_quantifier_free(matrix):
        raise FormulaError("sentence is not in prenex form")
    return quants, matrix


def optimize(A: TracialAlgebra, sigma: Formula, budget: int = DEFAULT_BUDGET, *, seed: int = 0,
             assignment: Optional[Mapping[str, AlgElement]] = None,
             hints: Sequence[Mapping[str, AlgElement]] = ()) -> CertifiedValue:
    """Best value found for a single-block or exists-forall sentence.

    The interval is ``[best, M]`` for sup and ``[m, best]`` for inf; for
    exists-forall it is the formula's full bound range, since a heuristic
    inner sup is not one-sided.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    quants, matrix = _split(sigma)
    assignment = dict(assignment or {})
    missing = free_vars(sigma) - set(assignment)
    if missing:
        raise FormulaError(f"no value for free variables {sorted(missing)}")
    fixed_env = stack_assignment(A, {k: assignment[k] for k in free_vars(sigma)})
    kinds = [k for k, _ in quants]
    m, M = bounds(sigma)
    if not kinds:
        v = float(np.reshape(batch_qf(A, matrix, fixed_env), -1)[0])
        return CertifiedValue(interval_hull([v], 0), {}, v, {"evaluations": 1}, certified=False)
    if len(set(kinds)) == 1:
        sign = 1.0 if kinds[0] == "sup" else -1.0
        names = [v for _, v in quants]

        def objective(env):
            return sign * batch_qf(A, matrix, {**fixed_env, **env})

        best, theta, lay, evals = maximize(A, names, objective, budget=budget, seed=seed, hints=hints)
        value = sign * best
        witness = lay.to_elements(theta[None])[0]
        interval = interval_hull([value, M] if sign > 0 else [m, value], 0)
        return CertifiedValue(interval, witness, value, {"evaluations": evals}, certified=False)
    cls_split = kinds.index("sup")
    if kinds[0] != "inf" or any(k != "sup" for k in kinds[cls_split:]):
        raise FormulaError(f"unsupported quantifier prefix {kinds}")
    outer = [v for _, v in quants[:cls_split]]
    inner = [v for _, v in quants[cls_split:]]
    inner_budget = max(2000, budget // 40)
    total = [0]

    def inner_value(x_elems: Mapping[str, AlgElement]) -> float:
        env0 = {**fixed_env, **stack_assignment(A, x_elems)}
        best, _, _, ev = maximize(A, inner, lambda env: batch_qf(A, matrix, {**env0, **env}),
                                  budget=inner_budget, seed=seed)
        total[0] += ev
        return best

    lay = Layout(A, outer)
    rng = np.random.default_rng(seed)
    pool = list(hints) + _structured(A, outer, rng)
    for k in range(8):
        pool.append({v: random_unit_ball(A, seed * 7919 + 31 * k + j) for j, v in enumerate(outer)})
    cand = [(inner_value(x), i, x) for i, x in enumerate(pool)]
    cand.sort(key=lambda c: (c[0], c[1]))
    best_val, _, best_x = cand[0]
    theta = lay.from_elements([best_x])[0]
    radius = 0.25
    for _ in range(12):
        trial = lay.project(theta[None] + radius * rng.standard_normal((1, lay.D)))
        x = lay.to_elements(trial)[0]
        v = inner_value(x)
        if v < best_val:
            best_val, best_x, theta = v, x, trial[0]
        else:
            radius *= 0.6
    interval = interval_hull([m, M], 0)
    return CertifiedValue(interval, dict(best_x), best_val, {"evaluations": total[0]}, certified=False)
