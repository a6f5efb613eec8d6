import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import mat
from formula_gen import random_qf, random_term
from tracial.algebra import TracialAlgebra, in_unit_ball, matrix_algebra, random_unit_ball, random_unitary
from tracial.evaluate import (
    CertificationError, DimensionCapError, EvaluationError, certify, enclose, eval_qf, eval_term, optimize,
)
from tracial.formula import FormulaError, Quant
from tracial.numerics import Dyadic
from tracial.parser import parse_formula, parse_term

P = parse_formula
M1, M2, M3 = matrix_algebra(1), matrix_algebra(2), matrix_algebra(3)
M1M2 = TracialAlgebra([(1, Dyadic(1, 1)), (2, Dyadic(1, 1))])
e12 = M2.element([mat([0, 1], [0, 0])])
a = M2.element([mat([1, 0], [0, -1])])
swap = M2.element([mat([0, 1], [1, 0])])


def test_eval_term_examples():
    assert eval_term(M2, parse_term("adj(x)"), {"x": e12}) == M2.element([mat([0, 0], [1, 0])])
    z = eval_term(M2, parse_term("avg(1, (-1/2^0 + 0/2^0 i) . 1)"), {})
    assert z == M2.zero()
    x, y = random_unit_ball(M3, 1), random_unit_ball(M3, 2)
    assert in_unit_ball(M3, eval_term(M3, parse_term("x * y"), {"x": x, "y": y}))


def test_eval_term_errors():
    with pytest.raises(EvaluationError):
        eval_term(M2, parse_term("x * y"), {"x": e12})
    with pytest.raises(EvaluationError):
        eval_term(M2, parse_term("x"), {"x": M2.identity().scale(2)})


def test_eval_qf_examples():
    assert eval_qf(M2, P("d(x*y, y*x)"), {"x": a, "y": a}) == pytest.approx(0)
    assert eval_qf(M2, P("trRe(x)"), {"x": M2.identity()}) == pytest.approx(1)
    assert eval_qf(M2, P("monus(trRe(x), 2/2^0)"), {"x": random_unit_ball(M2, 0)}) == 0
    assert eval_qf(M2, P("d(x*y, y*x)"), {"x": a, "y": swap}) == pytest.approx(2)
    with pytest.raises(FormulaError):
        eval_qf(M2, P("sup x . trRe(x)"), {})


def test_unit_ball_preservation_many_terms():
    rng = np.random.default_rng(11)
    fleet = [M1, M2, M3]
    for k in range(10_000):
        A = fleet[k % 3]
        t = random_term(rng, ["x", "y"], degree=int(rng.integers(1, 7)))
        asg = {"x": random_unit_ball(A, (k, 0)), "y": random_unit_ball(A, (k, 1))}
        assert in_unit_ball(A, eval_term(A, t, asg), tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_enclosure_contains_samples(seed):
    rng = np.random.default_rng(seed)
    phi = random_qf(rng, ["x", "y"], degree=3, depth=3)
    for A in (M1, M2, M1M2):
        lo, hi = enclose(A, phi)
        for k in range(25):
            asg = {"x": random_unit_ball(A, (seed, k, 0)), "y": random_unit_ball(A, (seed, k, 1))}
            v = eval_qf(A, phi, asg)
            assert lo - 1e-9 <= v <= hi + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_enclosure_with_fixed_element(seed):
    rng = np.random.default_rng(seed)
    phi = random_qf(rng, ["x", "y"], degree=3, depth=2)
    x = random_unit_ball(M2, seed)
    lo, hi = enclose(M2, phi, {"x": x})
    for k in range(25):
        v = eval_qf(M2, phi, {"x": x, "y": random_unit_ball(M2, (seed, k))})
        assert lo - 1e-9 <= v <= hi + 1e-9


@pytest.mark.parametrize("seed", range(12))
def test_enclosure_dominates_optimizer_with_fixed_elements(seed):
    rng = np.random.default_rng(100 + seed)
    A = [M2, M3][seed % 2]
    phi = random_qf(rng, ["x", "y"], degree=3, depth=2)
    x = random_unit_ball(A, seed)
    lo, hi = enclose(A, phi, {"x": x})
    sup = optimize(A, Quant("sup", "y", phi), 8000, seed=seed, assignment={"x": x})
    inf = optimize(A, Quant("inf", "y", phi), 8000, seed=seed, assignment={"x": x})
    assert inf.witness_value >= lo - 1e-9 and sup.witness_value <= hi + 1e-9


def test_enclosure_is_exact_for_one_sided_products():
    x = random_unit_ball(M3, 5)
    lo, hi = enclose(M3, P("d(x*y, y)"), {"x": x})
    exact = float(np.sqrt(np.mean(np.abs(x.blocks[0] - np.eye(3)) ** 2) * 3))
    assert hi == pytest.approx(exact, abs=1e-9)
    u = random_unitary(M3, 6)
    assert eval_qf(M3, P("d(x*y, y)"), {"x": x, "y": u}) == pytest.approx(exact)


def test_enclosure_commutator_values():
    phi = P("d(x*y, y*x)")
    assert enclose(M1, phi)[1] == pytest.approx(0, abs=1e-9)
    assert enclose(M2, phi)[1] == pytest.approx(2)
    assert enclose(M2, phi, {"x": M2.identity()})[1] == pytest.approx(0, abs=1e-9)


def test_optimize_examples():
    cv = optimize(M2, P("sup x . trRe(x * adj(x))"))
    assert cv.witness_value >= 1 - 1e-6 and not cv.certified
    assert optimize(M1, P("sup x . sup y . d(x*y, y*x)")).witness_value == pytest.approx(0, abs=1e-9)
    cv = optimize(M2, P("sup x . sup y . d(x*y, y*x)"))
    assert cv.witness_value >= 2 - 1e-3
    assert cv.interval.contains(cv.witness_value)
    with pytest.raises(ValueError):
        optimize(M2, P("sup x . trRe(x)"), budget=0)


def test_optimize_inf_is_upper_end():
    cv = optimize(M2, P("inf x . trRe(x)"))
    assert cv.witness_value <= -1 + 1e-6
    assert cv.hi >= cv.witness_value


def test_certify_examples():
    cv = certify(M1, P("sup x . trRe(x * adj(x))"), Dyadic(1, 3))
    assert cv.interval.contains(1) and cv.width <= 1 / 8
    cv = certify(M2, P("sup x . d(a*x, x*a)"), Dyadic(1, 2), assignment={"a": a})
    assert cv.interval.contains(2) and cv.width <= 1 / 4
    for A in (M1, M2, M1M2):
        cv = certify(A, P("inf x . d(x, x)"), Dyadic(1, 4))
        assert cv.interval.contains(0) and cv.width <= 1 / 16


def test_certify_witness_inside_interval():
    cv = certify(M2, P("sup x . sup y . d(x*y, y*x)"), Dyadic(1, 2))
    assert cv.interval.contains(cv.witness_value)
    assert eval_qf(M2, P("d(x*y, y*x)"), cv.witness) == pytest.approx(cv.witness_value)


def test_certify_branches_when_enclosure_is_loose():
    # the product-of-norms bound is loose here; branching closes the gap on M1
    cv = certify(M1, P("sup x . (trRe(x * x) + (-1/2^0 . trRe(x * adj(x))))"), Dyadic(1, 4))
    assert cv.work.get("nodes", 0) > 0
    assert cv.width <= 1 / 16
    assert cv.interval.contains(0)


def test_monotone_refinement():
    sigma = P("sup x . max(trRe(x * x * x), trIm(avg(x, adj(x) * x)))")
    coarse = certify(M2, sigma, Dyadic(1, 2))
    fine = certify(M2, sigma, Dyadic(1, 5))
    slack = 2.0 ** -16
    assert coarse.lo - slack <= fine.lo and fine.hi <= coarse.hi + slack


def test_embedding_monotonicity():
    sigma = P("sup x . (trRe(x * x) + (-1/2^1 . d(x, adj(x))))")
    small = certify(M1, sigma, Dyadic(1, 4))
    big = certify(M2, sigma, Dyadic(1, 4))
    assert small.lo <= big.hi


def test_certify_errors():
    with pytest.raises(FormulaError):
        certify(M1, P("sup x . inf y . d(x, y)"), Dyadic(1, 2))
    with pytest.raises(FormulaError):
        certify(M1, P("sup x . d(x, y)"), Dyadic(1, 2))
    with pytest.raises(ValueError):
        certify(M1, P("sup x . trRe(x)"), 0)
    with pytest.raises(CertificationError):
        certify(M1, P("sup x . trRe(x)"), 2.0 ** -30)


def test_dimension_cap_reported_with_partial_interval():
    sigma = P("sup x . sup y . monus(monus(d(x * adj(y), x), trRe(x)), (d(x * adj(y), 0) + trRe(x)))")
    with pytest.raises(DimensionCapError) as info:
        certify(M2, sigma, Dyadic(1, 4))
    partial = info.value.partial
    assert partial is not None and not partial.certified
    assert partial.interval.contains(partial.witness_value)


def test_exists_forall_commutator():
    sigma = P("inf x . sup y . d(x*y, y*x)")
    for A in (M1, M2):
        cv = certify(A, sigma, Dyadic(1, 3))
        assert cv.interval.contains(0) and cv.width <= 1 / 8


def test_exists_forall_with_branching():
    sigma = P("inf x . sup y . d(x, y)")
    cv = certify(M1, sigma, Dyadic(1, 2))
    assert cv.interval.contains(1) and cv.width <= 1 / 4


def test_quantifier_free_sentence():
    cv = certify(M2, P("(trRe(x) + 1/2^2)"), Dyadic(1, 4), assignment={"x": M2.identity()})
    assert cv.interval.contains(1.25)
