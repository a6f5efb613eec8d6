"""
Values along the matrix chain M1, M2, M4
========================================

A universal sentence can only grow along the embeddings
``M1 -> M2 -> M4 -> ...``, and an existential one can only shrink; the
limits are the values on the hyperfinite factor.  Levels that are too
large to certify keep a sound but wider interval and are tagged ``wide``.
"""
from tracial import Dyadic, matrix_algebra, parse_formula
from tracial.formula import dualize
from tracial.microstates import compare_universal, microstate_sequence

eps = Dyadic(1, 4)
for text in ("sup x . sup y . d(x*y, y*x)",
             "sup x . (trRe(x * x) + (-1/2^1 . d(x, adj(x))))",
             "inf x . d(x*x, x)"):
    report = microstate_sequence(parse_formula(text), k_max=2, eps=eps)
    print(report.to_text())

# the dual existential sentence M - sigma moves the other way
sigma = parse_formula("sup x . trIm(x * x * x)")
print(microstate_sequence(dualize(sigma), k_max=1, eps=eps).to_text())

# comparing a given algebra with the chain
print(compare_universal(parse_formula("sup x . sup y . d(x*y, y*x)"), matrix_algebra(1), k_max=1).to_text())
