"""Finite-dimensional tracial von Neumann algebras.

A :class:`TracialAlgebra` is a direct sum ``M_{n_1} + ... + M_{n_k}``
with the faithful trace ``tr(x) = sum_i w_i * Tr(x_i) / n_i`` for
positive dyadic weights ``w_i`` summing to one.  Elements are tuples of
complex matrices, one per block.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .numerics import Dyadic

__all__ = [
    "TracialAlgebra", "AlgElement", "AlgebraError",
    "matrix_algebra", "trace", "hs_dist", "hs_norm", "op_norm", "in_unit_ball",
    "interpolate", "double_embed", "random_unit_ball", "project_unit_ball",
    "project_blocks", "random_unitary", "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-9


class AlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class TracialAlgebra:
    blocks: Tuple[Tuple[int, Dyadic], ...]

    def __init__(self, blocks: Iterable[Tuple[int, object]]):
        canon = []
        for n, w in blocks:
            n = int(n)
            w = Dyadic.coerce(w)
            if n < 1:
                raise AlgebraError(f"block dimension {n} must be positive")
            if w <= 0:
                raise AlgebraError(f"block weight {w} must be positive")
            canon.append((n, w))
        if not canon:
            raise AlgebraError("an algebra needs at least one block")
        total = sum((w for _, w in canon), Dyadic(0))
        if total != 1:
            raise AlgebraError(f"block weights sum to {total}, not 1")
        object.__setattr__(self, "blocks", tuple(canon))

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(n for n, _ in self.blocks)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(w) for _, w in self.blocks])

    @property
    def real_dim(self) -> int:
        """Real dimension of the algebra (and of one quantified variable)."""
        return sum(2 * n * n for n in self.dims)

    @property
    def is_factor(self) -> bool:
        return len(self.blocks) == 1

    def identity(self) -> "AlgElement":
        return AlgElement(self, tuple(np.eye(n, dtype=complex) for n in self.dims))

    def zero(self) -> "AlgElement":
        return AlgElement(self, tuple(np.zeros((n, n), dtype=complex) for n in self.dims))

    def element(self, blocks: Sequence) -> "AlgElement":
        return AlgElement(self, tuple(np.asarray(b, dtype=complex) for b in blocks))

    def __str__(self) -> str:
        if self.is_factor:
            return f"M{self.dims[0]}"
        return "blocks: [" + ", ".join(f"{n} @ {w}" for n, w in self.blocks) + "]"


def matrix_algebra(n: int) -> TracialAlgebra:
    return TracialAlgebra([(n, 1)])


class AlgElement:
    """An element of a :class:`TracialAlgebra`: one square matrix per block."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: TracialAlgebra, blocks: Sequence[np.ndarray]):
        blocks = tuple(np.array(b, dtype=complex) for b in blocks)
        if len(blocks) != len(algebra.dims) or any(
            b.shape != (n, n) for b, n in zip(blocks, algebra.dims)
        ):
            raise AlgebraError(
                f"element shapes {[b.shape for b in blocks]} do not match algebra {algebra}")
        for b in blocks:
            b.flags.writeable = False
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(self, "blocks", blocks)

    def __setattr__(self, key, value):
        raise AttributeError("AlgElement is immutable")

    def __eq__(self, other):
        if not isinstance(other, AlgElement):
            return NotImplemented
        return self.algebra == other.algebra and all(
            np.array_equal(a, b) for a, b in zip(self.blocks, other.blocks))

    def __hash__(self):
        return hash((self.algebra, tuple(b.tobytes() for b in self.blocks)))

    def __repr__(self):
        return f"AlgElement({self.algebra}, {[b.tolist() for b in self.blocks]})"

    # algebraic helpers used by tests and demos
    def __matmul__(self, other: "AlgElement") -> "AlgElement":
        _check_same(self, other)
        return AlgElement(self.algebra, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def __add__(self, other: "AlgElement") -> "AlgElement":
        _check_same(self, other)
        return AlgElement(self.algebra, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other: "AlgElement") -> "AlgElement":
        _check_same(self, other)
        return AlgElement(self.algebra, [a - b for a, b in zip(self.blocks, other.blocks)])

    def scale(self, c: complex) -> "AlgElement":
        return AlgElement(self.algebra, [c * a for a in self.blocks])

    @property
    def H(self) -> "AlgElement":
        return AlgElement(self.algebra, [a.conj().T for a in self.blocks])


def _check_same(x: AlgElement, y: AlgElement):
    if x.algebra != y.algebra:
        raise AlgebraError(f"elements live in different algebras: {x.algebra} vs {y.algebra}")


def _check_in(A: TracialAlgebra, x: AlgElement):
    if x.algebra != A:
        raise AlgebraError(f"element of {x.algebra} used in {A}")


def trace(A: TracialAlgebra, x: AlgElement) -> complex:
    """Normalized weighted trace; ``trace(A, 1) == 1``."""
    _check_in(A, x)
    return complex(sum(float(w) * np.trace(b) / n for (n, w), b in zip(A.blocks, x.blocks)))


def hs_norm(A: TracialAlgebra, x: AlgElement) -> float:
    _check_in(A, x)
    s = sum(float(w) * np.vdot(b, b).real / n for (n, w), b in zip(A.blocks, x.blocks))
    return float(np.sqrt(max(s, 0.0)))


def hs_dist(A: TracialAlgebra, x: AlgElement, y: AlgElement) -> float:
    """``||x - y||_2 = sqrt(tr((x - y)^* (x - y)))``."""
    _check_in(A, x)
    _check_in(A, y)
    return hs_norm(A, x - y)


def op_norm(A: TracialAlgebra, x: AlgElement) -> float:
    _check_in(A, x)
    return max(float(np.linalg.norm(b, 2)) for b in x.blocks)


def in_unit_ball(A: TracialAlgebra, x: AlgElement, tol: float = DEFAULT_TOL) -> bool:
    if tol < 0:
        raise AlgebraError("tolerance must be non-negative")
    return op_norm(A, x) <= 1.0 + tol


def project_blocks(mats: np.ndarray) -> np.ndarray:
    """Clip singular values of a stack of square matrices at 1.

    This is the nearest-point projection onto the operator-norm ball for
    the Frobenius (hence every weighted 2-) norm.
    """
    u, s, vh = np.linalg.svd(mats)
    if np.all(s <= 1.0):
        return mats
    s = np.minimum(s, 1.0)
    return (u * s[..., None, :]) @ vh


def project_unit_ball(A: TracialAlgebra, x: AlgElement) -> AlgElement:
    _check_in(A, x)
    return AlgElement(A, [project_blocks(b) for b in x.blocks])


def interpolate(B: TracialAlgebra, A: TracialAlgebra, t) -> TracialAlgebra:
    """The direct sum ``tB + (1-t)A`` with trace ``t tr_B + (1-t) tr_A``.

    At ``t = 0`` the result is ``A`` and at ``t = 1`` it is ``B``; the
    summand of weight zero is dropped so the trace stays faithful.
    """
    t = Dyadic.coerce(t)
    if t < 0 or t > 1:
        raise AlgebraError(f"interpolation parameter {t} outside [0, 1]")
    if t == 0:
        return A
    if t == 1:
        return B
    s = Dyadic(1) - t
    return TracialAlgebra([(n, t * w) for n, w in B.blocks] + [(n, s * w) for n, w in A.blocks])


def double_embed(x: AlgElement) -> AlgElement:
    """Unital trace-preserving embedding ``M_n -> M_2n``, ``x -> x (+) x``."""
    A = x.algebra
    if not A.is_factor:
        raise AlgebraError("double_embed needs a single-block algebra")
    (b,) = x.blocks
    n = b.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = b
    big[n:, n:] = b
    return AlgElement(matrix_algebra(2 * n), [big])


def _ball_block(rng: np.random.Generator, n: int) -> np.ndarray:
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    top = np.linalg.norm(g, 2)
    y = g / top * (1.0 - 2.0 ** -40)
    if rng.random() < 0.25:
        return y
    return y * rng.random()


def random_unit_ball(A: TracialAlgebra, seed) -> AlgElement:
    """Seeded sample from the operator-norm unit ball of ``A``.

    Each block is a normalized complex Ginibre matrix scaled by an
    independent uniform factor (left on the boundary a quarter of the
    time); the distribution charges every open subset of the ball.
    """
    rng = np.random.default_rng(seed)
    return AlgElement(A, [_ball_block(rng, n) for n in A.dims])


def random_unitary(A: TracialAlgebra, seed) -> AlgElement:
    """Haar-distributed unitary in each block."""
    rng = np.random.default_rng(seed)
    out = []
    for n in A.dims:
        z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        q, r = np.linalg.qr(z)
        d = np.diag(r)
        out.append(q * (d / np.abs(d)))
    return AlgElement(A, out)
