"""Acceptance criteria, one test per criterion.

Each test prints ``criterion k: PASS|FAIL ...``; the lines are repeated in
the pytest terminal summary.  Run alone with
``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from conftest import mat
from formula_gen import random_formula, random_qf, random_term, random_universal
from tracial.algebra import interpolate, matrix_algebra, random_unit_ball
from tracial.cep import build_separation, distinct_values_demo, interpolation_scan
from tracial.evaluate import batch_term, certify, eval_qf, optimize
from tracial.formula import Quant, bounds, dualize, prefix
from tracial.microstates import certify_or_widen
from tracial.numerics import Dyadic
from tracial.parser import format_formula, parse_formula
from tracial.presentation import BallRule, Presentation, encode, good_witness, upper_enumerate_ea

M1, M2 = matrix_algebra(1), matrix_algebra(2)
COMMUTATOR = parse_formula("sup x . sup y . d(x*y, y*x)")
EA_COMMUTATOR = parse_formula("inf x . sup y . d(x*y, y*x)")
SLACK = 1e-6

RESULTS = {}


class Check:
    """Collects named conditions for one criterion; fails the test if any is false."""

    def __init__(self, number):
        self.number = number
        self.failures = []
        self.notes = []
        self.start = time.time()

    def require(self, ok, what):
        if not ok:
            self.failures.append(what)

    def note(self, text):
        self.notes.append(text)

    def finish(self):
        status = "PASS" if not self.failures else "FAIL"
        detail = "; ".join(self.notes + [f"failed: {f}" for f in self.failures[:5]])
        line = f"criterion {self.number}: {status} ({time.time() - self.start:.1f}s) {detail}"
        RESULTS[self.number] = line
        print(line)
        assert not self.failures, line


def disk(h):
    r = np.arange(-1, 1 + h / 2, h)
    z = (r[:, None] + 1j * r[None, :]).ravel()
    return z[np.abs(z) <= 1]


# -- 1 ------------------------------------------------------------------------
def test_criterion_1_commutator_optimum():
    c = Check(1)
    eps = Dyadic(1, 2)
    on2 = certify(M2, COMMUTATOR, eps)
    on1 = certify(M1, COMMUTATOR, eps)
    c.require(on2.certified and on2.width <= 0.25 and on2.interval.contains(2), f"M2 interval {on2.interval}")
    c.require(on1.certified and on1.width <= 0.25 and on1.interval.contains(0), f"M1 interval {on1.interval}")
    x, y = M2.element([mat([1, 0], [0, -1])]), M2.element([mat([0, 1], [1, 0])])
    c.require(abs(eval_qf(M2, prefix(COMMUTATOR)[1], {"x": x, "y": y}) - 2) < 1e-12, "hand witness")
    c.note(f"M2 {on2.interval}, M1 {on1.interval}")
    c.require(time.time() - c.start < 300, "runtime")
    c.finish()


# -- 2 ------------------------------------------------------------------------
def separation_oracle(h=1 / 600):
    """min over the unit disk of the N=2 moment mismatch of z against diag(1,-1)."""
    z = disk(h)
    cz = np.conj(z)
    # words of length <= 2 in (x, x*); diag(1,-1) has traces 0 (odd) and 1 (even)
    parts = [z, cz, z * z - 1, z * cz - 1, cz * z - 1, cz * cz - 1]
    return float(np.min(np.max([np.maximum(abs(p.real), abs(p.imag)) for p in parts], axis=0)))


def test_criterion_2_separation_endpoints():
    c = Check(2)
    a = M2.element([mat([1, 0], [0, -1])])
    sep = build_separation(2, M2, [a])
    on2 = sep.certify(M2, Dyadic(1, 4))
    on1 = sep.certify(M1, Dyadic(1, 6))
    oracle = separation_oracle()
    golden = (math.sqrt(5) - 1) / 2
    c.require(on2.interval.contains(0), f"M2 interval {on2.interval}")
    c.require(abs(oracle - golden) <= 0.02, f"grid oracle {oracle}")
    c.require(on1.lo - 0.02 <= golden <= on1.hi + 0.02, f"M1 interval {on1.interval} vs {golden}")
    c.require(on1.lo - 0.02 <= oracle <= on1.hi + 0.02, f"M1 interval {on1.interval} vs grid {oracle}")
    c.note(f"M2 [{on2.lo:.2e},{on2.hi:.2e}], M1 [{on1.lo:.5f},{on1.hi:.5f}], grid {oracle:.5f}")
    c.finish()


# -- 3 ------------------------------------------------------------------------
def test_criterion_3_interpolation_law():
    c = Check(3)
    eps = Dyadic(1, 2)
    grid = [Dyadic(k, 2) for k in range(5)]
    rows = interpolation_scan(COMMUTATOR, M1, M2, grid, eps)
    for t, cv in rows:
        expected = 2 * math.sqrt(1 - float(t))
        c.require(cv.lo - 0.05 <= expected <= cv.hi + 0.05, f"t={t} interval {cv.interval} vs {expected:.4f}")
    c.require(rows[0][1].interval == certify(M2, COMMUTATOR, eps).interval, "t=0 collapse")
    c.require(rows[-1][1].interval == certify(M1, COMMUTATOR, eps).interval, "t=1 collapse")
    for t, cv in rows[1:-1]:
        best = optimize(interpolate(M1, M2, t), COMMUTATOR, seed=1).witness_value
        c.require(best <= cv.hi + SLACK and abs(best - 2 * math.sqrt(1 - float(t))) < 1e-3,
                  f"optimizer at t={t}: {best}")
    c.note(" ".join(f"t={float(t)}:[{cv.lo:.4f},{cv.hi:.4f}]" for t, cv in rows))
    c.finish()


# -- 4 ------------------------------------------------------------------------
def test_criterion_4_distinct_values():
    c = Check(4)
    rows = distinct_values_demo(COMMUTATOR, M1, M2, 3, Dyadic(1, 4))
    c.require(len(rows) >= 3, f"only {len(rows)} values")
    c.require(all(cv.certified and cv.width <= 1 / 16 for _, cv in rows), "certified at 1/16")
    for i, (_, a) in enumerate(rows):
        for _, b in rows[i + 1:]:
            c.require(a.interval.disjoint(b.interval), f"{a.interval} meets {b.interval}")
    c.note(" ".join(f"t={float(t)}:[{cv.lo:.4f},{cv.hi:.4f}]" for t, cv in rows))
    c.finish()


# -- 5 ------------------------------------------------------------------------
def test_criterion_5_microstate_monotonicity():
    c = Check(5)
    eps = Dyadic(1, 4)
    rng = np.random.default_rng(0)
    fleet = [M1, M2]
    closed = total = 0
    wide = []
    for i in range(20):
        sigma = random_universal(rng)
        dual = dualize(sigma)
        top = float(bounds(sigma)[1])
        vals = [certify_or_widen(A, sigma, eps) for A in fleet]
        duals = [certify_or_widen(A, dual, eps) for A in fleet]
        for cv in vals + duals:
            total += 1
            closed += cv.certified and cv.width <= float(eps)
        if not all(cv.certified for cv in vals + duals):
            wide.append(f"{i}({len(prefix(sigma)[0])} var)")
        c.require(vals[0].lo <= vals[1].hi + SLACK, f"sentence {i} universal step")
        c.require(duals[0].hi >= duals[1].lo - SLACK, f"sentence {i} existential step")
        for A, v, d in zip(fleet, vals, duals):
            # (M - sigma)^A = M - sigma^A whenever sigma^A <= M, which always holds
            c.require(d.lo <= top - v.lo + SLACK and top - v.hi - SLACK <= d.hi,
                      f"sentence {i} dual identity on {A}")
    c.note(f"{closed}/{total} intervals closed to eps; rigorous but wide on M2 for sentences {', '.join(wide)}")
    c.finish()


# -- 6 ------------------------------------------------------------------------
def random_presentation(rng, A, seed):
    rule = BallRule(seed)
    gens = [rule.element(A, int(rng.integers(0, 1000)), 0) for _ in range(int(rng.integers(2, 6)))]
    return Presentation(A, gens, rule=BallRule(seed + 1))


def test_criterion_6_good_witness():
    c = Check(6)
    eps = Dyadic(1, 2)
    rng = np.random.default_rng(6)
    indices = []
    for k in range(10):
        A = [M1, M2][k % 2]
        P = random_presentation(rng, A, 100 + k)
        phi = random_qf(rng, ["x"], 3, 2)
        sigma = Quant("sup", "x", phi)
        code = encode(P)
        N = good_witness(code, sigma, eps)
        again = good_witness(code, sigma, eps)
        c.require(N == again and encode(P) == code, f"presentation {k} not deterministic")
        best = max(eval_qf(A, phi, {"x": P.generator(i)[0]}) for i in range(N + 1))
        ref = certify(A, sigma, Dyadic(1, 4))
        c.require(ref.hi <= best + float(eps) + SLACK,
                  f"presentation {k}: value <= {ref.hi:.4f} but max_(i<=N) phi = {best:.4f}")
        indices.append(N)
    c.note(f"indices {indices}")
    c.finish()


# -- 7 ------------------------------------------------------------------------
EA_SENTENCES = [
    EA_COMMUTATOR,
    parse_formula("inf x . sup y . abs(trRe(x * y) + -1/2^2)"),
    parse_formula("inf x . sup y . monus(d(x*y, y), trRe(x))"),
]


def test_criterion_7_ea_enumeration():
    c = Check(7)
    eps = Dyadic(1, 3)
    for A in (M1, M2):
        P = Presentation(A, [random_unit_ball(A, 70), A.identity(), random_unit_ball(A, 71)],
                         rule=BallRule(7))
        for sigma in EA_SENTENCES:
            truth = certify(A, sigma, eps)
            emitted = list(upper_enumerate_ea(P, sigma, eps, 5))
            name = format_formula(sigma)
            for b in emitted:
                c.require(b.bound >= truth.lo - SLACK, f"{name} on {A}: bound {b.bound} < {truth.lo}")
            mins = [b.running_min for b in emitted]
            c.require(all(a >= b for a, b in zip(mins, mins[1:])), f"{name} on {A}: running min")
            if sigma is EA_COMMUTATOR:
                c.require(emitted[1].bound <= float(eps), f"identity step on {A}: {emitted[1].bound}")
                c.note(f"{A}: identity step bound {emitted[1].bound:.2e}, value {truth.interval}")
    c.finish()


# -- 8 ------------------------------------------------------------------------
CORPUS = [
    ("sup x . trRe(x * adj(x))", lambda x: abs(x) ** 2),
    ("sup x . sup y . d(x*y, y*x)", lambda x, y: abs(x * y - y * x)),
    ("inf x . d(x*x, x)", lambda x: abs(x * x - x)),
    ("sup x . trIm(x * x * x)", lambda x: (x ** 3).imag),
    ("sup x . monus(trRe(x), trRe(x * x))", lambda x: np.maximum(x.real - (x * x).real, 0)),
    ("inf x . abs(trRe(x * x) + 1/2^1)", lambda x: abs((x * x).real + 0.5)),
    ("sup x . d(x, adj(x))", lambda x: abs(x - np.conj(x))),
    ("sup x . min(trRe(x), trIm(x))", lambda x: np.minimum(x.real, x.imag)),
    ("inf x . max(abs(trRe(x) + -1/2^1), abs(trIm(x * x) + -1/2^2))",
     lambda x: np.maximum(abs(x.real - 0.5), abs((x * x).imag - 0.25))),
    ("sup x . sup y . (trRe(x * y) + (-1/2^0 . d(x, y)))", lambda x, y: (x * y).real - abs(x - y)),
    ("inf x . inf y . (d(x, y) + abs(trRe(x * adj(y)) + -1/2^2))",
     lambda x, y: abs(x - y) + abs((x * np.conj(y)).real - 0.25)),
    ("sup x . sup y . max(trIm(avg(x, y) * x), monus(trRe(y), 1/2^1))",
     lambda x, y: np.maximum((((x + y) / 2) * x).imag, np.maximum(y.real - 0.5, 0))),
]


def brute_force(text, fn):
    quants, _ = prefix(parse_formula(text))
    kind = quants[0][0]
    if len(quants) == 1:
        vals = fn(disk(1 / 400))
        return float(vals.max() if kind == "sup" else vals.min())
    z = disk(1 / 24)
    best = -np.inf if kind == "sup" else np.inf
    for chunk in np.array_split(z, 16):
        v = fn(chunk[:, None], z[None, :])
        best = max(best, float(v.max())) if kind == "sup" else min(best, float(v.min()))
    return best


def test_criterion_8_engine_self_consistency():
    c = Check(8)
    eps = Dyadic(1, 3)
    for text, fn in CORPUS:
        sigma = parse_formula(text)
        cv = certify(M1, sigma, eps)
        grid = brute_force(text, fn)
        c.require(cv.width <= float(eps), f"{text}: width {cv.width}")
        c.require(cv.lo - 2 * float(eps) <= grid <= cv.hi + 2 * float(eps), f"{text}: {cv.interval} vs grid {grid}")
        for A in (M1, M2):
            if A is M2 and len(prefix(sigma)[0]) > 1:
                continue
            outer = certify_or_widen(A, sigma, eps)
            best = optimize(A, sigma, seed=3).witness_value
            inside = best <= outer.hi + SLACK if prefix(sigma)[0][0][0] == "sup" else best >= outer.lo - SLACK
            c.require(inside, f"{text} on {A}: incumbent {best} outside {outer.interval}")
    c.note(f"{len(CORPUS)} sentences agree with grid")

    rng = np.random.default_rng(8)
    trips = 0
    for _ in range(1000):
        phi = random_formula(rng)
        trips += parse_formula(format_formula(phi)) == phi
    c.require(trips == 1000, f"round trips {trips}/1000")

    names = ["x", "y"]
    algebras = [M1, M2, matrix_algebra(3)]
    outside = 0
    count = 0
    for k in range(100):
        A = algebras[k % 3]
        env = {v: random_unit_ball(A, (8, k, j)) for j, v in enumerate(names)}
        stacked = {v: tuple(b[None] for b in e.blocks) for v, e in env.items()}
        for _ in range(100):
            t = random_term(rng, names, int(rng.integers(1, 5)))
            blocks = batch_term(A, t, stacked)
            count += 1
            outside += not all(np.linalg.norm(b[0], 2) <= 1 + 1e-9 for b in blocks)
    c.require(count == 10_000 and outside == 0, f"unit ball left {outside} times in {count}")
    c.note(f"1000 round trips, {count} ball-preserving evaluations")
    c.finish()


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
