import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from formula_gen import random_qf, random_term, random_universal
from tracial.algebra import hs_dist, matrix_algebra, random_unit_ball, TracialAlgebra
from tracial.evaluate import eval_qf
from tracial.formula import (
    Const, FormulaError, Monus, Quant, SentenceClass, TrRe, Var, bounds, classify, dualize, formula_degree,
    lipschitz_modulus, term_degree,
)
from tracial.numerics import Dyadic
from tracial.parser import parse_formula, parse_term

P = parse_formula


@pytest.mark.parametrize("text, expected", [
    ("trRe(x)", (-1, 1)),
    ("1/2^0", (1, 1)),
    ("d(x, y)", (0, 2)),
    ("monus(trRe(x), 2/2^0)", (0, 0)),
    ("(3/2^1 . trIm(x))", (-1.5, 1.5)),
    ("abs(trRe(x))", (0, 1)),
    ("sqrt(monus(trRe(x), -1/2^0))", (0, math.sqrt(2))),
])
def test_bounds_examples(text, expected):
    lo, hi = bounds(P(text))
    assert lo <= expected[0] and hi >= expected[1]
    assert lo == pytest.approx(expected[0], abs=1e-12) and hi == pytest.approx(expected[1], abs=1e-12)


@pytest.mark.parametrize("text, var, expected", [
    ("trRe(x * y)", "x", 1.0),
    ("(1/2^1 . (trRe(x) + trRe(x)))", "x", 1.0),
    ("3/2^2", "x", 0.0),
    ("d(x * y, y * x)", "y", 2.0),
    ("trRe(0 * x)", "x", 0.0),
    ("trRe(((1/2^1) . x) * x)", "x", 1.0),
])
def test_lipschitz_examples(text, var, expected):
    assert lipschitz_modulus(P(text), var) == pytest.approx(expected)


def test_lipschitz_rejects_bound_variable():
    with pytest.raises(FormulaError):
        lipschitz_modulus(P("sup x . trRe(x)"), "x")


def test_sqrt_modulus_infinite_near_zero():
    assert lipschitz_modulus(P("sqrt(trRe(x))"), "x") == math.inf
    assert lipschitz_modulus(P("sqrt(trRe(x) + 2/2^0)"), "x") == pytest.approx(0.5)


@pytest.mark.parametrize("text, cls", [
    ("sup x . trRe(x)", SentenceClass.UNIVERSAL),
    ("inf x . inf y . d(x, y)", SentenceClass.EXISTENTIAL),
    ("inf x . sup y . d(x*y, y*x)", SentenceClass.EXISTS_FORALL),
    ("sup x . inf y . d(x, y)", SentenceClass.OTHER),
    ("1/2^1", SentenceClass.QUANTIFIER_FREE),
])
def test_classify(text, cls):
    assert classify(P(text)) is cls


def test_classify_rejects_free_variables():
    with pytest.raises(FormulaError):
        classify(P("sup x . d(x, y)"))


def test_dualize_examples():
    assert dualize(P("sup x . trRe(x)")) == P("inf x . monus(1/2^0, trRe(x))")
    assert dualize(P("sup x . 0/2^0")) == P("inf x . monus(0/2^0, 0/2^0)")
    with pytest.raises(FormulaError):
        dualize(P("inf x . trRe(x)"))


def test_degree():
    assert term_degree(parse_term("x * (y * adj(x))")) == 3
    assert term_degree(parse_term("avg(x * x, y)")) == 2
    assert formula_degree(P("max(trRe(x * x), d(x, y * y * y))")) == 3


FLEET = [matrix_algebra(1), matrix_algebra(2), matrix_algebra(3),
         TracialAlgebra([(1, Dyadic(1, 1)), (2, Dyadic(1, 1))])]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_values_within_bounds(seed):
    rng = np.random.default_rng(seed)
    phi = random_qf(rng, ["x", "y"], degree=3, depth=3)
    lo, hi = bounds(phi)
    for k, A in enumerate(FLEET):
        asg = {"x": random_unit_ball(A, (seed, k, 0)), "y": random_unit_ball(A, (seed, k, 1))}
        v = eval_qf(A, phi, asg)
        assert lo - 1e-12 <= v <= hi + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_lipschitz_sound(seed):
    rng = np.random.default_rng(seed)
    phi = random_qf(rng, ["x", "y"], degree=3, depth=3)
    L = lipschitz_modulus(phi, "x")
    for k, A in enumerate(FLEET):
        y = random_unit_ball(A, (seed, k, 2))
        a, b = random_unit_ball(A, (seed, k, 0)), random_unit_ball(A, (seed, k, 1))
        gap = abs(eval_qf(A, phi, {"x": a, "y": y}) - eval_qf(A, phi, {"x": b, "y": y}))
        assert gap <= L * hs_dist(A, a, b) + 1e-9


def test_generated_sentences_are_universal():
    rng = np.random.default_rng(3)
    for _ in range(30):
        assert classify(random_universal(rng)) is SentenceClass.UNIVERSAL


def test_random_terms_respect_degree():
    rng = np.random.default_rng(5)
    for d in range(1, 7):
        for _ in range(20):
            assert term_degree(random_term(rng, ["x"], d)) <= d
