"""Certified sentence values by enclosure and Lipschitz branch-and-bound.

For a sentence ``sup_x phi`` (``inf`` is handled by negation) on a
finite-dimensional algebra:

1. the dimension-free enclosure of :mod:`.enclosure` gives an outer
   interval;
2. the heuristic search of :mod:`.search` gives an attained inner value;
3. if these are not yet ``eps`` apart, the entry box ``[-1, 1]^D`` of the
   quantified tuple is refined.  A box is evaluated at the projection of
   its center onto the ball; its upper bound is that value plus
   ``sum_v L_v r_v`` with ``L_v`` the Lipschitz modulus of the matrix in
   ``v`` and ``r_v`` the 2-norm radius of the box in ``v`` (projection onto
   a convex set does not increase distances to its points).  Boxes that
   provably miss the ball are dropped, and boxes whose bound cannot beat
   the incumbent by the target width are retired.

Exists-forall sentences ``inf_x sup_y phi`` are certified by running the
same scheme on ``x`` with the inner ``sup_y`` certified at every
evaluation point.

Every returned interval is widened by the declared floating-point slack.
"""
from __future__ import annotations

import math
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..algebra import AlgElement, TracialAlgebra, in_unit_ball
from ..formula import (
    Formula, FormulaError, bounds, free_vars, is_quantifier_free, lipschitz_modulus, prefix, size,
)
from ..numerics import Dyadic, interval_hull, slack_budget
from .enclosure import active_letters, enclose
from .layout import Layout
from .pointwise import batch_qf, stack_assignment
from .result import BudgetExceeded, CertificationError, CertifiedValue, DimensionCapError
from .search import DEFAULT_BUDGET, maximize

__all__ = ["certify", "DEFAULT_CAP", "DEFAULT_NODE_BUDGET"]

#: maximal real dimension of a quantified tuple that may be branched on
DEFAULT_CAP = 10
DEFAULT_NODE_BUDGET = 4_000_000
_BATCH = 4096
_HULL_BITS = 40


def _to_float_eps(eps) -> float:
    e = Dyadic.coerce(eps) if not isinstance(eps, float) else eps
    e = float(e)
    if not e > 0:
        raise ValueError("eps must be positive")
    return e


class _Problem:
    """``sup`` of ``sign * matrix`` over the quantified names, other variables fixed."""

    def __init__(self, A, matrix, names, sign, fixed):
        self.A = A
        self.matrix = matrix
        self.names = list(names)
        self.sign = sign
        self.fixed = dict(fixed)
        self.fixed_env = stack_assignment(A, self.fixed)
        self.layout = Layout(A, self.names)
        self.moduli = np.array([lipschitz_modulus(matrix, v) for v in self.names])

    def values(self, theta):
        env = {**self.fixed_env, **self.layout.to_env(theta)}
        vals = self.sign * np.asarray(batch_qf(self.A, self.matrix, env), dtype=float)
        return np.broadcast_to(vals, (np.atleast_2d(theta).shape[0],)).copy()


class _BoxSpace:
    """Boxes over a subset of the layout's coordinates, the rest held at zero.

    With ``reduce`` set, the first variable is restricted to its Schur
    form in every block: upper triangular with a real non-negative first
    superdiagonal.  Every tuple is unitarily conjugate to one of these, so
    for conjugation-invariant formulas the supremum is unchanged.  Box
    bounds stay valid because projecting onto the whole ball moves a point
    no further from any point of the ball.
    """

    def __init__(self, lay: Layout, moduli: np.ndarray, reduce: bool):
        self.lay = lay
        self.moduli = moduli
        active = np.ones(lay.D, bool)
        lower = -np.ones(lay.D)
        if reduce:
            first = lay.names[0]
            for name, _, start, n in lay.slices:
                if name != first:
                    continue
                for r in range(n):
                    for c in range(n):
                        re, im = start + r * n + c, start + n * n + r * n + c
                        if r > c:
                            active[re] = active[im] = False
                        elif c == r + 1:
                            active[im] = False
                            lower[re] = 0.0
        self.active = np.flatnonzero(active)
        self.d = len(self.active)
        self.lower = lower[self.active]
        scale = lay.metric_scale()[self.active]
        slot = lay.block_of_coordinate()[self.active]
        var_of_slot = np.array([lay.names.index(name) for name, *_ in lay.slices])
        self.scale, self.slot = scale, slot
        self.var_of_coord = var_of_slot[slot]
        self.split_weight = scale * moduli[self.var_of_coord]

    def initial(self):
        return self.lower[None].copy(), np.ones((1, self.d))

    def full(self, c: np.ndarray) -> np.ndarray:
        out = np.zeros((c.shape[0], self.lay.D))
        out[:, self.active] = c
        return out

    def geometry(self, lo: np.ndarray, hi: np.ndarray):
        """Full-space centers, per-variable 2-norm radii, and a ball-miss mask."""
        lay = self.lay
        c = self.full((lo + hi) / 2)
        h = (hi - lo) / 2
        n_slots = len(lay.slices)
        frob = np.zeros((len(lo), n_slots))
        rad_sq = np.zeros((len(lo), len(lay.names)))
        np.add.at(frob.T, self.slot, (h ** 2).T)
        np.add.at(rad_sq.T, self.var_of_coord, ((h * self.scale) ** 2).T)
        env = lay.to_env(c)
        sig = np.empty((len(lo), n_slots))
        for s, (name, i, _, _) in enumerate(lay.slices):
            sig[:, s] = np.linalg.norm(env[name][i], ord=2, axis=(-2, -1))
        outside = np.any(sig - np.sqrt(frob) > 1.0, axis=1)
        return c, np.sqrt(rad_sq), outside

    def split(self, lo: np.ndarray, hi: np.ndarray):
        rows = np.arange(len(lo))
        j = np.argmax((hi - lo) * self.split_weight, axis=1)
        mid = (lo[rows, j] + hi[rows, j]) / 2
        left_hi = hi.copy()
        left_hi[rows, j] = mid
        right_lo = lo.copy()
        right_lo[rows, j] = mid
        return np.concatenate([lo, right_lo]), np.concatenate([left_hi, hi])


def _invariant(fixed: Mapping[str, AlgElement]) -> bool:
    # a formula whose fixed elements are all scalar is invariant under simultaneous unitary conjugation
    for x in fixed.values():
        for b in x.blocks:
            if np.any(b != b[0, 0] * np.eye(b.shape[0])):
                return False
    return True


def _branch_and_bound(prob: _Problem, incumbent: float, inc_theta, target: float,
                      ceiling: float, node_budget: int, work: Dict[str, int], space: "_BoxSpace"):
    """Refine boxes until every bound is within ``target`` of the incumbent.

    Returns ``(upper, incumbent, incumbent_theta)``.
    """
    lay = prob.layout
    if not np.all(np.isfinite(prob.moduli)):
        raise CertificationError("matrix has no finite Lipschitz modulus in a quantified variable")

    def evaluate(lo, hi):
        c, rad, outside = space.geometry(lo, hi)
        pc = lay.project(c)
        vals = prob.values(pc)
        ub = vals + rad @ prob.moduli
        work["nodes"] = work.get("nodes", 0) + len(lo)
        return np.minimum(ub, ceiling), vals, pc, outside

    lo, hi = space.initial()
    ub, vals, pc, outside = evaluate(lo, hi)
    retired = -math.inf
    while True:
        k = int(np.argmax(vals))
        if vals[k] > incumbent:
            incumbent, inc_theta = float(vals[k]), pc[k].copy()
        keep = ~outside
        lo, hi, ub = lo[keep], hi[keep], ub[keep]
        done = ub <= incumbent + target
        if np.any(done):
            retired = max(retired, float(ub[done].max()))
        lo, hi, ub = lo[~done], hi[~done], ub[~done]
        if len(ub) == 0:
            return max(retired, incumbent), incumbent, inc_theta
        if work.get("nodes", 0) > node_budget:
            err = BudgetExceeded(f"node budget {node_budget} exhausted with {len(ub)} open boxes")
            err.partial = (incumbent, max(retired, float(ub.max()), incumbent), inc_theta)
            raise err
        if len(ub) > _BATCH:
            order = np.argsort(-ub, kind="stable")
            sel, rest = order[:_BATCH], order[_BATCH:]
        else:
            sel, rest = np.arange(len(ub)), np.arange(0)
        clo, chi = space.split(lo[sel], hi[sel])
        cub, vals, pc, cout = evaluate(clo, chi)
        # a child's bound never needs to exceed its parent's
        cub = np.minimum(cub, np.tile(ub[sel], 2))
        nrest = len(rest)
        lo = np.concatenate([lo[rest], clo])
        hi = np.concatenate([hi[rest], chi])
        ub = np.concatenate([ub[rest], cub])
        outside = np.concatenate([np.zeros(nrest, bool), cout])


def _finish(sign, lo, hi, eta, witness, witness_value, work, certified=True):
    if sign < 0:
        lo, hi = -hi, -lo
    interval = interval_hull([lo, hi], eta, bits=_HULL_BITS)
    return CertifiedValue(interval, witness, witness_value, work, certified=certified)


def _certify_block(A, matrix, names, kind, fixed, eps, eta, cap, node_budget, search_budget,
                   seed, hints, work) -> CertifiedValue:
    sign = 1.0 if kind == "sup" else -1.0
    target = eps - 2 * eta - 2.0 ** (3 - _HULL_BITS)
    if target <= 0:
        raise CertificationError(f"eps {eps} is below the slack budget {2 * eta}")
    # variables that cancel out of every basic formula are pinned at zero
    active = active_letters(A, matrix, fixed)
    idle = [v for v in names if v not in active]
    if idle and len(idle) < len(names):
        pinned = {v: A.zero() for v in idle}
        try:
            cv = _certify_block(A, matrix, [v for v in names if v in active], kind, {**fixed, **pinned},
                                eps, eta, cap, node_budget, search_budget, seed,
                                [{k: h[k] for k in h if k not in pinned} for h in hints], work)
        except CertificationError as err:
            if isinstance(err.partial, CertifiedValue) and err.partial.witness is not None:
                err.partial.witness.update(pinned)
            raise
        if cv.witness is not None:
            cv.witness.update(pinned)
        return cv
    elo, ehi = enclose(A, matrix, fixed)
    ceiling = ehi if sign > 0 else -elo
    prob = _Problem(A, matrix, names, sign, fixed)
    best, theta, lay, evals = maximize(A, names, prob_objective(prob), budget=search_budget,
                                       seed=seed, hints=hints)
    work["evaluations"] = work.get("evaluations", 0) + evals
    upper = ceiling
    if upper - best > target:
        try:
            space = _BoxSpace(lay, prob.moduli, _invariant(fixed))
            if space.d > cap:
                raise DimensionCapError(
                    f"branching needs {space.d} real dimensions, above the cap of {cap}; "
                    f"enclosure and search left a gap of {upper - best:.3g}")
            upper, best, theta = _branch_and_bound(prob, best, theta, target, ceiling, node_budget,
                                                   work, space)
        except CertificationError as err:
            if isinstance(err.partial, tuple):
                best, upper, theta = err.partial
            witness = lay.to_elements(theta[None])[0]
            err.partial = _finish(sign, best, upper, eta, witness, sign * best, work, certified=False)
            raise
    witness = lay.to_elements(theta[None])[0]
    return _finish(sign, best, max(upper, best), eta, witness, sign * best, work)


def prob_objective(prob: _Problem):
    def objective(env):
        full = {**prob.fixed_env, **env}
        return prob.sign * batch_qf(prob.A, prob.matrix, full)
    return objective


def _ea_partial(lower, upper, x, eta, work):
    interval = interval_hull([min(lower, upper), upper], eta, bits=_HULL_BITS)
    return CertifiedValue(interval, dict(x) if x is not None else None, upper, work, certified=False)


def _certify_ea(A, matrix, outer, inner, fixed, eps, eta, cap, node_budget, search_budget,
                seed, hints, work) -> CertifiedValue:
    """``inf_outer sup_inner matrix``."""
    target = eps - 2 * eta - 2.0 ** (3 - _HULL_BITS)
    if target <= 0:
        raise CertificationError(f"eps {eps} is below the slack budget {2 * eta}")
    inner_eps = target / 2
    outer_target = target - inner_eps
    elo, ehi = enclose(A, matrix, fixed)

    def inner_cert(x: Mapping[str, AlgElement]) -> CertifiedValue:
        cv = _certify_block(A, matrix, inner, "sup", {**fixed, **x}, inner_eps + 2 * eta, eta, cap,
                            node_budget, max(2000, search_budget // 8), seed, (), work)
        work["inner"] = work.get("inner", 0) + 1
        return cv

    lay = Layout(A, outer)
    moduli = np.array([lipschitz_modulus(matrix, v) for v in outer])
    # candidate outer points: hints, structured points, heuristic search
    from .search import _structured
    rng = np.random.default_rng(seed)
    pool = list(hints) + _structured(A, outer, rng)
    best_hi, best_x = math.inf, None
    lower = elo
    for x in pool:
        cv = inner_cert(x)
        if cv.hi < best_hi:
            best_hi, best_x = cv.hi, x
        if best_hi - lower <= target:
            break
    if best_hi - lower > target:
        space = _BoxSpace(lay, moduli, _invariant(fixed))
        if space.d > cap:
            err = DimensionCapError(f"outer branching needs {space.d} real dimensions, above the cap of {cap}")
            err.partial = _ea_partial(lower, best_hi, best_x, eta, work)
            raise err
        if not np.all(np.isfinite(moduli)):
            raise CertificationError("matrix has no finite Lipschitz modulus in an outer variable")
        lo, hi = space.initial()
        lbs = np.array([elo])
        retired = math.inf
        while len(lo):
            keep = lbs < best_hi - target
            if np.any(~keep):
                retired = min(retired, float(lbs[~keep].min()))
            lo, hi, lbs = lo[keep], hi[keep], lbs[keep]
            if not len(lo):
                break
            if work.get("nodes", 0) > node_budget:
                err = BudgetExceeded(f"node budget {node_budget} exhausted")
                err.partial = _ea_partial(min(lower, retired, float(lbs.min())), best_hi, best_x, eta, work)
                raise err
            clo, chi = space.split(lo, hi)
            c, rad, outside = space.geometry(clo, chi)
            parent = np.tile(lbs, 2)
            points = lay.to_elements(lay.project(c))
            child_lb = np.full(len(clo), math.inf)
            for k in range(len(clo)):
                work["nodes"] = work.get("nodes", 0) + 1
                if outside[k]:
                    continue
                cv = inner_cert(points[k])
                if cv.hi < best_hi:
                    best_hi, best_x = cv.hi, points[k]
                child_lb[k] = max(cv.lo - float(rad[k] @ moduli), parent[k])
            inside = ~outside
            lo, hi, lbs = clo[inside], chi[inside], child_lb[inside]
        lower = max(lower, min(retired, best_hi))
    lower = min(lower, best_hi)
    interval = interval_hull([lower, best_hi], eta, bits=_HULL_BITS)
    return CertifiedValue(interval, dict(best_x) if best_x is not None else None, best_hi, work)


def certify(A: TracialAlgebra, sigma: Formula, eps, *,
            assignment: Optional[Mapping[str, AlgElement]] = None,
            cap: int = DEFAULT_CAP, node_budget: int = DEFAULT_NODE_BUDGET,
            search_budget: int = DEFAULT_BUDGET, seed: int = 0,
            hints: Sequence[Mapping[str, AlgElement]] = (),
            extra_slack: float = 0.0) -> CertifiedValue:
    """Interval of width at most ``eps`` containing the value of ``sigma`` in ``A``.

    ``sigma`` has a single quantifier block or is exists-forall (one block
    of ``inf`` followed by one block of ``sup``).  Free variables take their
    values from ``assignment``.  ``extra_slack`` is added to the declared
    floating-point slack (used for truncated constants).  Raises
    :class:`DimensionCapError` when branching would exceed ``cap`` real
    dimensions and :class:`BudgetExceeded` when ``node_budget`` boxes do not
    suffice.
    """
    eps_f = _to_float_eps(eps)
    quants, matrix = prefix(sigma)
    if not is_quantifier_free(matrix):
        raise FormulaError("sentence is not in prenex form")
    assignment = dict(assignment or {})
    free = free_vars(sigma)
    missing = free - set(assignment)
    if missing:
        raise FormulaError(f"no value for free variables {sorted(missing)}")
    fixed = {k: assignment[k] for k in free}
    for name, x in fixed.items():
        if x.algebra != A or not in_unit_ball(A, x):
            raise FormulaError(f"value for {name!r} is not in the unit ball of {A}")
    eta = slack_budget(size(sigma)) + float(extra_slack)
    work: Dict[str, int] = {}
    kinds = [k for k, _ in quants]
    if not kinds:
        env = stack_assignment(A, fixed)
        v = float(np.reshape(batch_qf(A, matrix, env), -1)[0])
        return CertifiedValue(interval_hull([v], eta, bits=_HULL_BITS), {}, v, {"evaluations": 1})
    if len(set(kinds)) == 1:
        return _certify_block(A, matrix, [v for _, v in quants], kinds[0], fixed, eps_f, eta, cap,
                              node_budget, search_budget, seed, hints, work)
    split = kinds.index("sup")
    if kinds[0] == "inf" and all(k == "sup" for k in kinds[split:]):
        return _certify_ea(A, matrix, [v for _, v in quants[:split]], [v for _, v in quants[split:]],
                           fixed, eps_f, eta, cap, node_budget, search_budget, seed, hints, work)
    raise FormulaError(f"certification supports single-block and inf-sup prefixes, not {kinds}")
