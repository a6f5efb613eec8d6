import numpy as np
import pytest

from conftest import mat
from tracial.algebra import (
    AlgebraError, TracialAlgebra, double_embed, hs_dist, hs_norm, in_unit_ball, interpolate, matrix_algebra,
    op_norm, project_unit_ball, random_unit_ball, random_unitary, trace,
)
from tracial.numerics import Dyadic

HALF = Dyadic(1, 1)
M1, M2 = matrix_algebra(1), matrix_algebra(2)
M1M2 = TracialAlgebra([(1, HALF), (2, HALF)])
e11 = M2.element([mat([1, 0], [0, 0])])
e12 = M2.element([mat([0, 1], [0, 0])])
swap = M2.element([mat([0, 1], [1, 0])])


def test_algebra_validation():
    with pytest.raises(AlgebraError):
        TracialAlgebra([(2, HALF)])
    with pytest.raises(AlgebraError):
        TracialAlgebra([(0, 1)])
    with pytest.raises(AlgebraError):
        TracialAlgebra([(1, -1), (1, 2)])
    assert M1M2.real_dim == 2 + 8


@pytest.mark.parametrize("A", [M1, M2, matrix_algebra(3), M1M2])
def test_trace_of_identity(A):
    assert trace(A, A.identity()) == pytest.approx(1)


def test_trace_examples():
    assert trace(M2, e11) == pytest.approx(0.5)
    x = M1M2.element([mat([1]), np.zeros((2, 2))])
    assert trace(M1M2, x) == pytest.approx(0.5)


def test_hs_dist_examples():
    assert hs_dist(M2, M2.zero(), M2.identity()) == pytest.approx(1)
    assert hs_dist(M1M2, M1M2.zero(), M1M2.identity()) == pytest.approx(1)
    assert hs_dist(M2, e12, M2.zero()) == pytest.approx(np.sqrt(0.5))
    assert hs_dist(M2, e12, e12) == 0


def test_shape_mismatch():
    with pytest.raises(AlgebraError):
        trace(M2, M1.identity())
    with pytest.raises(AlgebraError):
        M2.element([np.eye(3)])


def test_unit_ball_examples():
    assert in_unit_ball(M2, M2.identity())
    assert not in_unit_ball(M2, M2.identity().scale(2))
    assert in_unit_ball(M2, swap)


def test_interpolate():
    assert interpolate(M1, M2, 1) == M1
    assert interpolate(M1, M2, 0) == M2
    assert interpolate(M1, M2, HALF) == M1M2
    for k in range(9):
        A = interpolate(M1M2, matrix_algebra(3), Dyadic(k, 3))
        assert sum((w for _, w in A.blocks), Dyadic(0)) == 1
        assert trace(A, A.identity()) == pytest.approx(1)
    with pytest.raises(AlgebraError):
        interpolate(M1, M2, Dyadic(3, 1))


def test_double_embed():
    assert double_embed(M2.identity()) == matrix_algebra(4).identity()
    for s in range(100):
        x, y = random_unit_ball(M2, s), random_unit_ball(M2, s + 1000)
        X, Y = double_embed(x), double_embed(y)
        assert trace(X.algebra, X) == pytest.approx(trace(M2, x))
        assert hs_dist(X.algebra, X, Y) == pytest.approx(hs_dist(M2, x, y))
        assert op_norm(X.algebra, X) == pytest.approx(op_norm(M2, x))
    with pytest.raises(AlgebraError):
        double_embed(M1M2.identity())


def test_random_unit_ball():
    assert random_unit_ball(M2, 7) == random_unit_ball(M2, 7)
    assert random_unit_ball(M2, 7) != random_unit_ball(M2, 8)
    samples = [random_unit_ball(M2, s) for s in range(10_000)]
    assert all(in_unit_ball(M2, x, tol=0.0) for x in samples)
    mean = np.mean([trace(M2, x).real for x in samples])
    assert abs(mean) < 0.05


def test_random_unitary():
    u = random_unitary(M1M2, 3)
    assert (u @ u.H) .blocks[1] == pytest.approx(np.eye(2))
    assert op_norm(M1M2, u) == pytest.approx(1)


def test_metric_and_cauchy_schwarz():
    A = M1M2
    for s in range(200):
        x, y, z = (random_unit_ball(A, (s, k)) for k in range(3))
        assert abs(trace(A, x)) <= hs_norm(A, x) + 1e-12 <= 1 + 1e-12
        assert hs_dist(A, x, y) == pytest.approx(hs_dist(A, y, x))
        assert hs_dist(A, x, z) <= hs_dist(A, x, y) + hs_dist(A, y, z) + 1e-9


def test_projection():
    x = M2.element([mat([2, 0], [0, 0.5j])])
    p = project_unit_ball(M2, x)
    assert p.blocks[0] == pytest.approx(mat([1, 0], [0, 0.5j]))
    inside = random_unit_ball(M2, 1)
    assert project_unit_ball(M2, inside).blocks[0] == pytest.approx(inside.blocks[0])
