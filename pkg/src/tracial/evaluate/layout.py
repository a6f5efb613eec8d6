"""Flat real coordinates for tuples of algebra elements."""
from __future__ import annotations

from typing import Dict, List, Mapping, Sequence

import numpy as np

from ..algebra import AlgElement, TracialAlgebra, project_blocks

__all__ = ["Layout"]


class Layout:
    """Maps ``(B, D)`` real arrays to stacked elements of ``A`` for each name.

    Coordinates are, per variable and block, the real parts followed by
    the imaginary parts of the entries in row-major order.
    """

    def __init__(self, A: TracialAlgebra, names: Sequence[str]):
        self.A = A
        self.names = list(names)
        self.slices = []  # (name, block index, start, n)
        pos = 0
        for name in self.names:
            for i, n in enumerate(A.dims):
                self.slices.append((name, i, pos, n))
                pos += 2 * n * n
        self.D = pos

    def to_env(self, theta: np.ndarray) -> Dict[str, tuple]:
        theta = np.atleast_2d(theta)
        B = theta.shape[0]
        env: Dict[str, list] = {name: [None] * len(self.A.dims) for name in self.names}
        for name, i, start, n in self.slices:
            chunk = theta[:, start:start + 2 * n * n].reshape(B, 2, n, n)
            env[name][i] = chunk[:, 0] + 1j * chunk[:, 1]
        return {k: tuple(v) for k, v in env.items()}

    def from_env(self, env: Mapping[str, Sequence[np.ndarray]]) -> np.ndarray:
        first = env[self.names[0]][0]
        B = first.shape[0]
        theta = np.empty((B, self.D))
        for name, i, start, n in self.slices:
            b = np.broadcast_to(env[name][i], (B, n, n))
            theta[:, start:start + n * n] = b.real.reshape(B, -1)
            theta[:, start + n * n:start + 2 * n * n] = b.imag.reshape(B, -1)
        return theta

    def from_elements(self, tuples: Sequence[Mapping[str, AlgElement]]) -> np.ndarray:
        env = {name: tuple(np.stack([t[name].blocks[i] for t in tuples])
                           for i in range(len(self.A.dims))) for name in self.names}
        return self.from_env(env)

    def to_elements(self, theta: np.ndarray) -> List[Dict[str, AlgElement]]:
        env = self.to_env(theta)
        B = np.atleast_2d(theta).shape[0]
        return [{name: AlgElement(self.A, [b[k] for b in env[name]]) for name in self.names}
                for k in range(B)]

    def project(self, theta: np.ndarray) -> np.ndarray:
        env = self.to_env(theta)
        return self.from_env({k: tuple(project_blocks(b) for b in v) for k, v in env.items()})

    def block_of_coordinate(self) -> np.ndarray:
        """For each coordinate, the index into ``self.slices`` it belongs to."""
        out = np.empty(self.D, dtype=int)
        for s, (_, _, start, n) in enumerate(self.slices):
            out[start:start + 2 * n * n] = s
        return out

    def metric_scale(self) -> np.ndarray:
        """Per-coordinate factor ``sqrt(w_i / n_i)`` of the weighted 2-norm."""
        out = np.empty(self.D)
        for name, i, start, n in self.slices:
            w = float(self.A.blocks[i][1])
            out[start:start + 2 * n * n] = np.sqrt(w / n)
        return out
