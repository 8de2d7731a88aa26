"""Projections onto the condensate and the counting functions built from them.

With p = |phi><phi| and q = 1 - p acting on each particle, P_k projects on
exactly k particles outside phi. Functions of the count c are applied by
rotating every particle into a basis whose first vector is phi, where P_k
is diagonal.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .manybody import _as_batch, apply_one_body


def condensate_basis(phi: np.ndarray) -> np.ndarray:
    """Unitary D x D matrix whose first column is ``phi`` (normalised)."""
    phi = np.asarray(phi, dtype=complex)
    phi = phi / np.linalg.norm(phi)
    D = phi.size
    Q, _ = np.linalg.qr(np.column_stack([phi, np.eye(D, dtype=complex)]))
    Q = Q[:, :D]
    # restore the exact phase of the first column
    Q[:, 0] *= np.vdot(Q[:, 0], phi) / abs(np.vdot(Q[:, 0], phi))
    return Q


class CountingOperators:
    """p_j, q_j, P_k and the weights m, n, m_d, n_d for N particles."""

    def __init__(self, phi: np.ndarray, N: int):
        self.phi = np.asarray(phi, dtype=complex) / np.linalg.norm(phi)
        self.N = N
        self.D = self.phi.size
        self.dim = self.D**N
        self.U = condensate_basis(self.phi)
        self.p = np.outer(self.phi, self.phi.conj())
        self.q = np.eye(self.D) - self.p
        occ = (np.arange(self.D) != 0).astype(np.int8)
        c = np.zeros((1,), dtype=np.int16)
        for _ in range(N):
            c = (c[:, None] + occ[None, :]).reshape(-1)
        self.count = c

    # one-body projections, applied as rank-one updates
    def p_on(self, x, j):
        xb, single = _as_batch(x, self.dim)
        t = xb.reshape(self.D**j, self.D, -1)
        c = np.matmul(self.phi.conj(), t)
        y = (self.phi[None, :, None] * c[:, None, :]).reshape(xb.shape)
        return y[:, 0] if single else y

    def q_on(self, x, j):
        return x - self.p_on(x, j)

    def _rotate(self, x, inverse: bool):
        A = self.U.conj().T if not inverse else self.U
        for j in range(self.N):
            x = apply_one_body(A, x, j, self.N)
        return x

    def apply_function(self, f: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
        """sum_k f(k) P_k applied to x."""
        xb, single = _as_batch(x, self.dim)
        y = self._rotate(xb.astype(complex), inverse=False)
        y = y * f(self.count.astype(float))[:, None]
        y = self._rotate(y, inverse=True)
        return y[:, 0] if single else y

    def apply_functions(self, fs, x: np.ndarray) -> list[np.ndarray]:
        """Several count functions applied to the same x, sharing the forward rotation."""
        xb, single = _as_batch(x, self.dim)
        y = self._rotate(xb.astype(complex), inverse=False)
        c = self.count.astype(float)
        out = [self._rotate(y * f(c)[:, None], inverse=True) for f in fs]
        return [o[:, 0] for o in out] if single else out

    def rotated_basis(self) -> np.ndarray:
        """Columns (U x ... x U) e_y: each lies in the range of p_j or q_j for every j."""
        return self._rotate(np.eye(self.dim, dtype=complex), inverse=True)

    def excited(self, j: int) -> np.ndarray:
        """Boolean mask over rotated-basis columns: particle j outside phi."""
        idx = np.arange(self.dim)
        return (idx // self.D ** (self.N - 1 - j)) % self.D != 0

    def P(self, k: int, x):
        return self.apply_function(lambda c: (c == k).astype(float), x)

    def mhat(self, x, d: int = 0):
        """m_d = sum_k (k + d)/N P_k."""
        N = self.N
        return self.apply_function(lambda c: (c + d) / N, x)

    def nhat(self, x, d: int = 0):
        """n_d = sum_k sqrt((k + d)/N) P_k, zero where k + d < 0."""
        N = self.N
        return self.apply_function(lambda c: np.sqrt(np.clip(c + d, 0, None) / N), x)

    def mhat_inverse_q(self, x):
        """m^{-1} restricted to the range of q_1 (N/k on P_k, k >= 1)."""
        N = self.N
        return self.apply_function(lambda c: np.where(c > 0, N / np.maximum(c, 1), 0.0), x)

    def nhat_inverse(self, x):
        N = self.N
        return self.apply_function(lambda c: np.where(c > 0, np.sqrt(N / np.maximum(c, 1)), 0.0), x)

    def dense(self, op: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Materialise an operator given as a batched apply function."""
        return op(np.eye(self.dim, dtype=complex))


def sum_of_projectors_error(ops: CountingOperators) -> float:
    I = np.eye(ops.dim, dtype=complex)
    total = sum(ops.P(k, I) for k in range(ops.N + 1))
    return float(np.abs(total - I).max())


def binomial_weights_check(ops: CountingOperators) -> float:
    """Trace of P_k should be C(N, k) (D - 1)^k."""
    err = 0.0
    for k in range(ops.N + 1):
        tr = int(np.sum(ops.count == k))
        err = max(err, abs(tr - math.comb(ops.N, k) * (ops.D - 1) ** k))
    return float(err)
