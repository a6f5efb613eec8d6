
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import mat
from tracial.algebra import TracialAlgebra, in_unit_ball, matrix_algebra
from tracial.evaluate import certify, eval_qf
from tracial.formula import FormulaError
from tracial.numerics import Dyadic
from tracial.parser import parse_formula, parse_term
from tracial.presentation import (
    BallRule, DecodeError, Presentation, PresentationError, WitnessExhausted, decode, encode,
    enumerate_value, formula_interval, good_witness, upper_enumerate_ea,
)

M1, M2 = matrix_algebra(1), matrix_algebra(2)
SWAP = M2.element([mat([0, 1], [1, 0])])
E12 = M2.element([mat([0, 1], [0, 0])])
NORM = parse_formula("sup x . trRe(x * adj(x))")
EA = parse_formula("inf x . sup y . d(x*y, y*x)")


def test_presentation_validation():
    with pytest.raises(PresentationError):
        Presentation(M2, [])
    with pytest.raises(PresentationError):
        Presentation(M2, [SWAP.scale(2)])
    with pytest.raises(PresentationError):
        Presentation(M2, [M1.identity()])
    with pytest.raises(PresentationError):
        Presentation(M2, [(SWAP, SWAP), (SWAP,)])
    P = Presentation(M2, [SWAP])
    assert P.finite and len(P) == 1
    with pytest.raises(IndexError):
        P.generator(1)


def test_rule_generators_are_dyadic_ball_elements():
    P = Presentation(M2, [SWAP], rule=BallRule(3), arity=1)
    assert not P.finite
    for i in range(1, 6):
        (x,) = P.generator(i)
        assert in_unit_ball(M2, x)
        scaled = x.blocks[0] * 2.0 ** 32
        assert np.all(scaled.real == np.round(scaled.real))
    assert np.array_equal(P.generator(4)[0].blocks[0], P.generator(4)[0].blocks[0])


def test_enumerate_value_nests():
    P = Presentation(M2, [E12, SWAP])
    f = parse_term("x * adj(x)")
    prev = None
    for n in range(1, 12):
        iv = enumerate_value(P, f, [0], n)
        assert iv.contains(Dyadic(1, 1))
        assert iv.width() == Dyadic(1, n)
        if prev is not None:
            assert prev.lo <= iv.lo and iv.hi <= prev.hi
        prev = iv
    assert enumerate_value(P, parse_term("x * y"), {"x": 0, "y": 1}, 6, channel="im").contains(0)


def test_formula_interval_matches_float_evaluation():
    A = TracialAlgebra([(1, Dyadic(1, 1)), (2, Dyadic(1, 1))])
    rule = BallRule(11)
    P = Presentation(A, [], rule=rule, arity=2)
    phi = parse_formula("max(d(x*y, y*x), sqrt(abs(trIm(x * adj(y)))) + monus(trRe(x), 1/2^2))")
    for i in range(4):
        x, y = P.generator(i)
        v = eval_qf(A, phi, {"x": x, "y": y})
        iv = formula_interval(P, phi, {"x": (i, 0), "y": (i, 1)}, 20)
        assert iv.width() <= Dyadic(1, 20)
        assert float(iv.lo) - 1e-9 <= v <= float(iv.hi) + 1e-9


def test_code_round_trip():
    A = TracialAlgebra([(1, Dyadic(1, 2)), (3, Dyadic(3, 2))])
    gens = [tuple(BallRule(0).element(A, i, k) for k in range(2)) for i in range(3)]
    for P in (Presentation(A, gens), Presentation(A, gens, rule=BallRule(5)),
              Presentation(M2, [], rule=BallRule(9))):
        code = encode(P)
        assert decode(code) == P
        assert encode(decode(code)) == code
        assert int.from_bytes(code, "big") > 0


def test_decode_rejects_bad_codes():
    code = encode(Presentation(M2, [SWAP, E12]))
    with pytest.raises(DecodeError):
        decode(b"XXXX" + code[4:])
    with pytest.raises(DecodeError):
        decode(code[:-3])
    with pytest.raises(DecodeError):
        decode(code + b"\x00")
    with pytest.raises(DecodeError):
        decode(b"")


@settings(max_examples=30, deadline=None)
@given(st.binary(max_size=64))
def test_decode_never_crashes(data):
    try:
        decode(data)
    except DecodeError:
        pass


def test_good_witness_finite():
    P = Presentation(M2, [M2.zero(), M2.identity(), SWAP])
    code = encode(P)
    assert good_witness(code, NORM, Dyadic(1, 2)) == 1
    assert good_witness(P, NORM, Dyadic(1, 2)) == good_witness(code, NORM, Dyadic(1, 2))
    with pytest.raises(WitnessExhausted):
        good_witness(Presentation(M2, [M2.zero()] * 3), NORM, Dyadic(1, 2))


def test_good_witness_rule_is_good():
    P = Presentation(M2, [M2.zero()], rule=BallRule(7))
    eps = Dyadic(1, 3)
    N = good_witness(P, NORM, eps)
    best = max(eval_qf(M2, parse_formula("trRe(x * adj(x))"), {"x": P.generator(i)[0]}) for i in range(N + 1))
    ref = certify(M2, NORM, Dyadic(1, 4))
    assert ref.hi <= best + float(eps) + 1e-12


def test_good_witness_errors():
    P = Presentation(M2, [SWAP])
    with pytest.raises(FormulaError):
        good_witness(P, parse_formula("inf x . trRe(x)"), Dyadic(1, 2))
    with pytest.raises(PresentationError):
        good_witness(P, parse_formula("sup x . sup y . d(x, y)"), Dyadic(1, 2))
    with pytest.raises(DecodeError):
        good_witness(b"junk", NORM, Dyadic(1, 2))


def test_upper_enumerate_ea():
    P = Presentation(M2, [SWAP, M2.zero(), M2.identity()], rule=BallRule(1))
    bounds = list(upper_enumerate_ea(P, EA, Dyadic(1, 3), 5))
    assert [b.step for b in bounds] == list(range(5))
    mins = [b.running_min for b in bounds]
    assert mins == sorted(mins, reverse=True)
    assert bounds[1].bound <= 1 / 8 + 1e-9
    assert bounds[0].to_text().startswith("step 0 generator 0: bound <= ")
    truth = certify(M2, EA, Dyadic(1, 3))
    assert all(b.bound >= truth.lo - 1e-9 for b in bounds)
    with pytest.raises(FormulaError):
        list(upper_enumerate_ea(P, NORM, Dyadic(1, 3), 2))
