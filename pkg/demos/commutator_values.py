"""
How far from commuting can two contractions be?
===============================================

The sentence ``sup x . sup y . d(x*y, y*x)`` measures the largest
2-norm of a commutator of unit-ball elements.  On the scalars it is 0, on
2x2 matrices it is 2, and on the mixture ``t M1 + (1-t) M2`` it is
``2 sqrt(1 - t)``.
"""
import math

import numpy as np

from tracial import Dyadic, certify, matrix_algebra, parse_formula
from tracial.algebra import interpolate
from tracial.cep import distinct_values_demo, interpolation_scan

sigma = parse_formula("sup x . sup y . d(x*y, y*x)")
M1, M2 = matrix_algebra(1), matrix_algebra(2)
eps = Dyadic(1, 4)

# certified intervals on the two pure algebras
for A in (M1, M2):
    cv = certify(A, sigma, eps)
    print(f"{A}: {cv.interval}  (width {cv.width:.2e})")

# the optimum on M2 is attained by a sign matrix and a swap
x, y = cv.witness["x"], cv.witness["y"]
print("witness x =\n", np.round(x.blocks[0], 3))
print("witness y =\n", np.round(y.blocks[0], 3))

# scanning the mixed trace t tr_M1 + (1 - t) tr_M2
grid = [Dyadic(k, 3) for k in range(9)]
for t, cv in interpolation_scan(sigma, M1, M2, grid, eps):
    print(f"t={float(t):.3f}  [{cv.lo:.5f}, {cv.hi:.5f}]  2 sqrt(1-t) = {2 * math.sqrt(1 - float(t)):.5f}")

# the mixtures are algebras in their own right
print(interpolate(M1, M2, Dyadic(1, 2)))

# disjoint intervals show the values really differ along the scan
for t, cv in distinct_values_demo(sigma, M1, M2, 4, eps):
    print(f"distinct value at t={t}: {cv.interval}")
