"""Spin-1 matrices and the two-particle spin coupling."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_R2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SpinMatrixTriple:
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    def __iter__(self):
        return iter((self.s1, self.s2, self.s3))

    def stack(self) -> np.ndarray:
        """Shape (3, 3, 3): index 0 runs over the three spin directions."""
        return np.stack([self.s1, self.s2, self.s3])


@dataclass(frozen=True)
class PairSpinOperator:
    """sigma_1 . sigma_2 on C^3 (x) C^3, first factor is the slow index."""

    matrix: np.ndarray

    def squared(self) -> np.ndarray:
        return self.matrix @ self.matrix


@lru_cache(maxsize=None)
def _spin_stack() -> np.ndarray:
    s1 = _R2 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    s2 = -1j * _R2 * np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]], dtype=complex)
    s3 = np.diag([1.0, 0.0, -1.0]).astype(complex)
    out = np.stack([s1, s2, s3])
    out.setflags(write=False)
    return out


def spin_matrices() -> SpinMatrixTriple:
    s = _spin_stack()
    return SpinMatrixTriple(s[0].copy(), s[1].copy(), s[2].copy())


@lru_cache(maxsize=None)
def _bullet() -> np.ndarray:
    s = _spin_stack()
    m = sum(np.kron(s[l], s[l]) for l in range(3))
    m.setflags(write=False)
    return m


def bullet_pair() -> PairSpinOperator:
    return PairSpinOperator(_bullet().copy())


def swap_operator(d: int = 3) -> np.ndarray:
    """Permutation matrix exchanging the factors of C^d (x) C^d."""
    S = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            S[j * d + i, i * d + j] = 1.0
    return S


def spin_density(phi: np.ndarray, axis: int = 0) -> np.ndarray:
    """Real vector (<phi, s_l phi>)_l.

    ``phi`` holds the three spinor components along ``axis``; any further
    axes are treated pointwise. The result has the spin direction on the
    same axis.
    """
    phi = np.moveaxis(np.asarray(phi, dtype=complex), axis, 0)
    m = np.einsum("ia,lij,ja->la", phi.conj().reshape(3, -1), _spin_stack(),
                  phi.reshape(3, -1)).real
    return np.moveaxis(m.reshape((3,) + phi.shape[1:]), 0, axis)


def spin_dot_sigma(m: np.ndarray) -> np.ndarray:
    """Pointwise 3x3 matrices sum_l m_l s_l for m of shape (3, *points).

    Returns shape (*points, 3, 3).
    """
    m = np.asarray(m)
    return np.einsum("l...,lij->...ij", m, _spin_stack())
