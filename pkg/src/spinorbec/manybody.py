"""Exact N-body spin-1 dynamics on a 1D periodic grid.

The one-body space is C^(n*3) with basis index ``a = point * 3 + spin``
(see :meth:`SpinorField.to_vector`). N-body vectors are flat arrays of
length ``(3n)^N`` in C order, particle 1 slowest. Operators accept either
a single vector ``(dim,)`` or a batch ``(dim, B)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from .grids import GridMismatchError, GridSpec, ScalarField, SpinorField
from .potentials import GPScaled
from .spin import bullet_pair

DEFAULT_DIM_CAP = 2**23
DENSE_LIMIT = 4096


class DimensionCapError(ValueError):
    pass


class KrylovConvergenceError(RuntimeError):
    pass


def _as_batch(x: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    if x.shape[0] != dim:
        raise ValueError(f"vector length {x.shape[0]} != {dim}")
    single = x.ndim == 1
    return (x[:, None] if single else x), single


def apply_one_body(A: np.ndarray, x: np.ndarray, j: int, N: int) -> np.ndarray:
    """Apply a one-body operator ``A`` (D x D) to particle ``j`` (0-based)."""
    D = A.shape[0]
    xb, single = _as_batch(x, D**N)
    B = xb.shape[1]
    y = np.matmul(A, xb.reshape(D**j, D, -1)).reshape(D**N, B)
    return y[:, 0] if single else y


def apply_two_body(C: np.ndarray, x: np.ndarray, N: int, D: int) -> np.ndarray:
    """Apply a two-body operator ``C`` (D^2 x D^2) to particles 1 and 2."""
    xb, single = _as_batch(x, D**N)
    B = xb.shape[1]
    y = np.matmul(C, xb.reshape(D * D, -1)).reshape(D**N, B)
    return y[:, 0] if single else y


def kinetic_matrix(grid: GridSpec) -> np.ndarray:
    """Spectral -Laplacian on the 1D grid as a dense real symmetric n x n matrix."""
    n = grid.points[0]
    k2 = grid.k_squared()
    T = np.fft.ifft(k2[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    return np.ascontiguousarray(T.real)


def pair_table(kernel: ScalarField) -> np.ndarray:
    """K(x_i - x_j) for the periodic 1D grid, shape (n, n)."""
    n = kernel.grid.points[0]
    i = np.arange(n)
    return kernel.data[(i[:, None] - i[None, :] + n // 2) % n].astype(float)


def _is_even(kernel: ScalarField) -> bool:
    n = kernel.grid.points[0]
    d = np.asarray(kernel.data)
    m = np.arange(1, n // 2)
    return bool(np.allclose(d[n // 2 + m], d[n // 2 - m], rtol=0, atol=1e-14 * (1 + np.abs(d).max())))


def pair_operator(Wt: np.ndarray, Vt: np.ndarray) -> np.ndarray:
    """Dense two-body matrix W(x1-x2) I + V(x1-x2) sigma1.sigma2, (D^2, D^2)."""
    n = Wt.shape[0]
    D = 3 * n
    B4 = bullet_pair().matrix.reshape(3, 3, 3, 3)
    C = np.zeros((n, 3, n, 3, n, 3, n, 3), dtype=complex)
    eye = np.eye(3)
    for i in range(n):
        for k in range(n):
            C[i, :, k, :, i, :, k, :] = (Wt[i, k] * np.einsum("su,tv->stuv", eye, eye)
                                         + Vt[i, k] * B4)
    return C.reshape(D * D, D * D)


class ManyBodyHamiltonian(LinearOperator):
    """Sum of spectral kinetic terms plus ``prefactor * sum_{j<k}`` pair interactions."""

    def __init__(self, grid: GridSpec, N: int, W: ScalarField, V: ScalarField,
                 prefactor: float, dim_cap: int = DEFAULT_DIM_CAP):
        if grid.dim != 1:
            raise ValueError("the many-body oracle is one-dimensional")
        if N < 2:
            raise ValueError("N must be >= 2")
        for K in (W, V):
            if K.grid != grid:
                raise GridMismatchError("kernel sampled on a different grid")
            if not _is_even(K):
                raise ValueError("kernels must be even: K(x) = K(-x)")
        n = grid.points[0]
        self.grid = grid
        self.N = N
        self.n = n
        self.D = 3 * n
        dim = self.D**N
        if dim > dim_cap:
            raise DimensionCapError(f"dimension {dim} exceeds cap {dim_cap}")
        self.prefactor = prefactor
        self.kin = kinetic_matrix(grid)
        self.Wt = prefactor * pair_table(W)
        self.Vt = prefactor * pair_table(V)
        self._has_V = bool(np.any(self.Vt != 0))
        self._B4 = bullet_pair().matrix.reshape(3, 3, 3, 3)
        self._eig = None
        super().__init__(dtype=complex, shape=(dim, dim))

    def _matvec(self, x):
        return self.apply(np.asarray(x).reshape(-1))

    def _matmat(self, X):
        return self.apply(np.asarray(X))

    def _adjoint(self):
        return self

    def apply(self, x: np.ndarray) -> np.ndarray:
        N, n, D = self.N, self.n, self.D
        xb, single = _as_batch(x, D**N)
        Bsz = xb.shape[1]
        out = np.zeros(xb.shape, dtype=complex)
        for j in range(N):
            y = np.matmul(self.kin, xb.reshape(D**j, n, -1))
            out += y.reshape(out.shape)
        for j in range(N):
            for k in range(j + 1, N):
                shp = (D**j, n, 3, D ** (k - j - 1), n, 3, D ** (N - k - 1) * Bsz)
                xs = xb.reshape(shp)
                os = out.reshape(shp)
                os += self.Wt[None, :, None, None, :, None, None] * xs
                if self._has_V:
                    xv = self.Vt[None, :, None, None, :, None, None] * xs
                    os += np.einsum("stuv,aiubjvc->aisbjtc", self._B4, xv, optimize=True)
        return out[:, 0] if single else out

    def to_dense(self, limit: int = 16384) -> np.ndarray:
        if self.shape[0] > limit:
            raise DimensionCapError(f"dense materialization of dim {self.shape[0]} refused")
        return self.apply(np.eye(self.shape[0], dtype=complex))

    def eigh(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(self.to_dense())
        return self._eig

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.vdot(psi, self.apply(psi)).real)


def build_hamiltonian(grid: GridSpec, N: int, W, V, scaling: str = "mean_field",
                      n_exp: float | None = None,
                      dim_cap: int = DEFAULT_DIM_CAP) -> ManyBodyHamiltonian:
    """Assemble H_N.

    ``scaling``: ``mean_field`` (prefactor 1/N), ``gp`` (kernels replaced by
    N^2 K(N x), prefactor 1; W and V must be radial potential objects), or
    ``physical`` (prefactor 1/n_exp).
    """
    if scaling == "mean_field":
        pref = 1.0 / N
    elif scaling == "gp":
        if isinstance(W, ScalarField) or isinstance(V, ScalarField):
            raise TypeError("gp scaling needs radial potential objects, not sampled kernels")
        W, V = GPScaled(W, N), GPScaled(V, N)
        pref = 1.0
    elif scaling == "physical":
        if not n_exp:
            raise ValueError("physical scaling needs n_exp")
        pref = 1.0 / n_exp
    else:
        raise ValueError(f"unknown scaling {scaling!r}")
    if not isinstance(W, ScalarField):
        W = W.sample(grid)
    if not isinstance(V, ScalarField):
        V = V.sample(grid)
    return ManyBodyHamiltonian(grid, N, W, V, pref, dim_cap)


# --- states -----------------------------------------------------------------


@dataclass
class ManyBodyState:
    n_particles: int
    one_body_dim: int
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((self.one_body_dim,) * self.n_particles)

    def symmetry_error(self) -> float:
        return symmetry_error(self.amplitudes, self.n_particles, self.one_body_dim)


def product_state(phi: np.ndarray, N: int) -> np.ndarray:
    out = phi
    for _ in range(N - 1):
        out = np.kron(out, phi)
    return out


def symmetrize(psi: np.ndarray, N: int, D: int) -> np.ndarray:
    t = psi.reshape((D,) * N)
    acc = np.zeros_like(t)
    perms = list(permutations(range(N)))
    for p in perms:
        acc += np.transpose(t, p)
    return (acc / len(perms)).reshape(-1)


def symmetry_error(psi: np.ndarray, N: int, D: int) -> float:
    t = psi.reshape((D,) * N)
    err = 0.0
    for j in range(N - 1):
        err = max(err, float(np.abs(t - np.swapaxes(t, j, j + 1)).max()))
    return err


def random_symmetric_state(N: int, D: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal(D**N) + 1j * rng.standard_normal(D**N)
    x = symmetrize(x, N, D)
    return x / np.linalg.norm(x)


def symmetric_single_excitation(phi: np.ndarray, chi: np.ndarray, N: int) -> np.ndarray:
    """Normalised symmetrisation of chi (x) phi^(N-1), for chi orthogonal to phi."""
    terms = []
    for j in range(N):
        factors = [chi if i == j else phi for i in range(N)]
        out = factors[0]
        for f in factors[1:]:
            out = np.kron(out, f)
        terms.append(out)
    e = sum(terms)
    return e / np.linalg.norm(e)


def perturbed_product_state(phi: np.ndarray, chi: np.ndarray, N: int, K: float) -> np.ndarray:
    """normalize(phi^N + eps * single excitation), eps tuned so alpha = K / N.

    A single excitation contributes at most 1/N to alpha, so 0 <= K < 1.
    """
    if not 0 <= K < 1:
        raise ValueError("a single excitation reaches alpha = K/N only for 0 <= K < 1")
    chi = chi - np.vdot(phi, chi) * phi
    chi = chi / np.linalg.norm(chi)
    eps = math.sqrt(K / (1 - K))
    psi = product_state(phi, N) + eps * symmetric_single_excitation(phi, chi, N)
    return psi / np.linalg.norm(psi)


# --- propagation --------------------------------------------------------------


def _lanczos(apply, v: np.ndarray, m: int, stop=None):
    """Lanczos with full re-orthogonalisation.

    ``stop(alpha, beta)`` is consulted after every step and ends the
    iteration early when it returns True.
    """
    beta0 = np.linalg.norm(v)
    V = np.empty((m + 1, v.size), dtype=complex)
    V[0] = v / beta0
    alpha = np.zeros(m)
    beta = np.zeros(m)
    k = m
    for j in range(m):
        w = apply(V[j])
        for sweep in range(2):
            c = (V[: j + 1] @ w.conj()).conj()
            w -= c @ V[: j + 1]
            alpha[j] += c[j].real
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-12 * max(1.0, abs(alpha[j])):
            k = j + 1
            beta[j] = 0.0
            break
        V[j + 1] = w / beta[j]
        if stop is not None and stop(alpha[: j + 1], beta[: j + 1]):
            k = j + 1
            break
    return V[:k], alpha[:k], beta[:k], k, beta0


def _krylov_coeffs(a, b, tau, sign):
    k = a.size
    lam, U = scipy.linalg.eigh_tridiagonal(a, b[: k - 1])
    y = U @ (np.exp(-1j * sign * tau * lam) * U[0].conj())
    return y, abs(b[k - 1] * y[k - 1])


def expm_krylov(apply, v: np.ndarray, t: float, tol: float = 1e-10, m: int = 30,
                max_substeps: int = 10000, min_dim: int = 4) -> tuple[np.ndarray, dict]:
    """exp(-i t H) v for Hermitian H given by ``apply``.

    Each substep builds a Lanczos basis of at most ``m`` vectors, stopping
    as soon as the a-posteriori estimate ``beta_k |e_k^T exp(-i tau T_k) e_1| |v|``
    for the requested step is below ``tol``. If the full basis does not
    reach ``tol`` the step is halved (reusing the basis) until it does.
    """
    info = {"substeps": 0, "matvecs": 0, "err": 0.0}
    if t == 0:
        return np.array(v, dtype=complex, copy=True), info
    sign = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    w = np.array(v, dtype=complex, copy=True)
    tau = remaining
    while remaining > 0:
        if info["substeps"] >= max_substeps:
            raise KrylovConvergenceError("Krylov propagation exceeded its substep budget")
        tau = min(tau, remaining)
        nrm = np.linalg.norm(w)

        def stop(a, b, tau=tau, nrm=nrm):
            return a.size >= min_dim and _krylov_coeffs(a, b, tau, sign)[1] * nrm <= tol

        V, a, b, k, nrm = _lanczos(apply, w, m, stop)
        info["matvecs"] += k
        while True:
            y, est = _krylov_coeffs(a, b, tau, sign)
            err = est * nrm
            if err <= tol:
                break
            tau *= 0.5
            if tau < abs(t) * 1e-13:
                raise KrylovConvergenceError(f"Krylov step collapsed (err {err:.2e} > tol {tol:.1e})")
        w = nrm * (y @ V)
        del V
        remaining -= tau
        if remaining < abs(t) * 1e-14:
            remaining = 0.0
        info["substeps"] += 1
        info["err"] += err
        if k < m:
            tau *= 2.0
    return w, info


def propagate(H: ManyBodyHamiltonian, psi0: np.ndarray, t: float, tol: float = 1e-10,
              method: str = "auto", krylov_dim: int = 30) -> np.ndarray:
    """exp(-i t H) psi0 (dense eigendecomposition below 4096, Krylov otherwise)."""
    if method == "auto":
        method = "dense" if H.shape[0] <= DENSE_LIMIT else "krylov"
    if method == "dense":
        lam, U = H.eigh()
        return U @ (np.exp(-1j * t * lam) * (U.conj().T @ psi0))
    if method == "krylov":
        out, _ = expm_krylov(H.apply, psi0, t, tol, krylov_dim)
        return out
    raise ValueError(f"unknown method {method!r}")


def dense_expm_apply(H_dense: np.ndarray, psi0: np.ndarray, t: float) -> np.ndarray:
    """Reference exp(-i t H) psi0 by scipy's dense expm."""
    return scipy.linalg.expm(-1j * t * H_dense) @ psi0


# --- reduced densities --------------------------------------------------------


@dataclass
class OneBodyDensity:
    matrix: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())


def reduce_one_body(psi: np.ndarray, N: int, D: int, particle: int = 0) -> OneBodyDensity:
    """gamma[a, b] = sum_rest psi(a, rest) conj(psi(b, rest)), tracing out all but ``particle``."""
    t = np.moveaxis(psi.reshape((D,) * N), particle, 0).reshape(D, -1)
    g = t @ t.conj().T
    return OneBodyDensity(0.5 * (g + g.conj().T))


def alpha(psi: np.ndarray, phi: np.ndarray, N: int, D: int | None = None) -> float:
    """1 - <phi, gamma^(1) phi>."""
    D = phi.size if D is None else D
    g = reduce_one_body(psi, N, D).matrix
    return float(1.0 - np.vdot(phi, g @ phi).real)


def trace_distance(gamma: OneBodyDensity, phi: np.ndarray) -> float:
    """Tr | gamma - |phi><phi| |."""
    diff = gamma.matrix - np.outer(phi, phi.conj())
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def spinor_to_onebody(phi: SpinorField) -> np.ndarray:
    return phi.to_vector()


def one_body_multiplication(field) -> np.ndarray:
    """D x D matrix of a pointwise scalar or 3x3 multiplication operator on the 1D grid."""
    if isinstance(field, ScalarField):
        return np.diag(np.repeat(np.asarray(field.data, dtype=complex).reshape(-1), 3))
    data = np.asarray(field.data).reshape(-1, 3, 3)
    n = data.shape[0]
    out = np.zeros((3 * n, 3 * n), dtype=complex)
    for i in range(n):
        out[3 * i:3 * i + 3, 3 * i:3 * i + 3] = data[i]
    return out
