"""
Presented algebras and dovetailing
==================================

A presentation lists unit-ball generators, possibly continued forever by
a seeded rule.  Generator entries are dyadic, so every trace is an exact
rational and oracle intervals nest.  A presentation is serialized to a
canonical byte string, which doubles as a natural number.
"""
import numpy as np

from tracial import Dyadic, matrix_algebra, parse_formula
from tracial.parser import parse_term
from tracial.presentation import (BallRule, Presentation, decode, encode, enumerate_value,
                                  good_witness, upper_enumerate_ea)

M2 = matrix_algebra(2)
swap = M2.element([np.array([[0, 1], [1, 0]], dtype=complex)])
P = Presentation(M2, [M2.zero(), swap], rule=BallRule(seed=4))

code = encode(P)
print(len(code), "bytes; as a number:", int.from_bytes(code, "big") % 10 ** 12, "(last 12 digits)")
assert decode(code) == P

# nested dyadic intervals for tr(x x*) at the third generator
for n in (2, 6, 10, 14):
    print(n, enumerate_value(P, parse_term("x * adj(x)"), [2], n))

# a good witness: some generator comes within eps of the supremum
sigma = parse_formula("sup x . trRe(x * adj(x))")
N = good_witness(code, sigma, Dyadic(1, 3))
print("good witness index:", N)

# upper bounds for an inf-sup sentence; zero and the identity commute with everything
Q = Presentation(M2, [swap, M2.zero(), M2.identity()], rule=BallRule(seed=5))
for bound in upper_enumerate_ea(Q, parse_formula("inf x . sup y . d(x*y, y*x)"), Dyadic(1, 3), 4):
    print(bound.to_text(), " running min", round(bound.running_min, 6))
