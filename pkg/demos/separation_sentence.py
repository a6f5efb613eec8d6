"""
Separating an algebra by its moments
====================================

Given a tuple ``a`` in ``A``, the sentence ``inf x . max_p |tr p(x) - tr p(a)|``
over words ``p`` of length at most ``N`` is 0 on ``A`` and positive on any
algebra that cannot reproduce those moments.  For ``a = diag(1, -1)`` in
``M2`` and ``N = 2`` the value on the scalars is the golden ratio
conjugate ``(sqrt 5 - 1) / 2``.
"""
import math

import numpy as np

from tracial import Dyadic, matrix_algebra
from tracial.cep import build_separation, monomials
from tracial.parser import format_formula

M1, M2 = matrix_algebra(1), matrix_algebra(2)
a = M2.element([np.diag([1.0, -1.0])])

sep = build_separation(2, M2, [a])
print("words:", monomials(1, 2))
print(format_formula(sep.formula))

on_m2 = sep.certify(M2, Dyadic(1, 6))
on_m1 = sep.certify(M1, Dyadic(1, 6))
print("on M2:", on_m2.interval)
print(f"on M1: [{on_m1.lo:.5f}, {on_m1.hi:.5f}]  golden ratio conjugate: {(math.sqrt(5) - 1) / 2:.5f}")

# a brute-force look at the scalar case: the best z balances |z| against |z^2 - 1|
r = np.linspace(-1, 1, 801)
z = (r[:, None] + 1j * r[None, :]).ravel()
z = z[np.abs(z) <= 1]
mismatch = np.maximum.reduce([np.maximum(abs(p.real), abs(p.imag))
                              for p in (z, z * z - 1, abs(z) ** 2 - 1 + 0j)])
print("grid minimum:", mismatch.min(), "at z =", z[mismatch.argmin()])
