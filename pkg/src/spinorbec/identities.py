"""Randomised checks of the operator identities behind the Gronwall argument.

Everything runs on a small 1D grid with N particles. Operator identities are
checked as dense matrices: operators are applied to the unitary basis
``U x ... x U`` (first column of U is phi). Each basis column lies in the
range of p_j or of q_j for every j, so for a monomial Q in p_1, p_2, q_1, q_2
the product X Q equals (X R) R^dagger with R the matching columns, and
Frobenius norms of X Q are read off from X R exactly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .counting import CountingOperators
from .grids import GridSpec, ScalarField, SpinorField
from .manybody import (apply_one_body, apply_two_body, alpha, one_body_multiplication,
                       pair_operator, pair_table, random_symmetric_state, reduce_one_body)
from .potentials import smear

# (particle-1 excited, particle-2 excited)
MONOMIALS = [(False, False), (False, True), (True, False), (True, True)]


def monomial_name(m) -> str:
    return "".join(("q" if e else "p") + str(i + 1) for i, e in enumerate(m))


@dataclass
class IdentityConfig:
    N: int = 3
    points: int = 4
    extent: float = 8.0
    n_seeds: int = 50
    seed: int = 0
    n_vectors: int = 20


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    kind: str = "max"  # "max": value <= tol; "margin": value <= tol with value a signed gap

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)


@dataclass
class IdentityReport:
    config: IdentityConfig
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def record(self, name: str, value: float, tol: float) -> None:
        prev = self.checks.get(name)
        if prev is None or value > prev.value:
            self.checks[name] = CheckResult(name, float(value), tol)

    def note(self, name: str, value: float) -> None:
        self.info[name] = min(self.info.get(name, np.inf), float(value))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def lines(self) -> list[str]:
        c = self.config
        out = [f"identity suite N={c.N} grid={c.points} extent={c.extent} seeds={c.n_seeds} seed={c.seed}"]
        for r in self.checks.values():
            out.append(f"{'PASS' if r.passed else 'FAIL'} {r.name:<34s} worst={r.value: .3e} tol={r.tol:.1e}")
        for k, v in self.info.items():
            out.append(f"info {k:<34s} {v:.3e}")
        out.append(f"overall {'PASS' if self.passed else 'FAIL'}")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def random_even_kernel(grid: GridSpec, rng: np.random.Generator, scale: float = 1.0) -> ScalarField:
    n = grid.points[0]
    half = scale * rng.uniform(-1, 1, n // 2 + 1)
    m = np.abs(np.arange(n) - n // 2)
    return ScalarField(grid, half[m])


def random_spinor(grid: GridSpec, rng: np.random.Generator) -> SpinorField:
    data = rng.standard_normal((3,) + grid.shape) + 1j * rng.standard_normal((3,) + grid.shape)
    return SpinorField(grid, data).normalize()


def _fro(x) -> float:
    return float(np.linalg.norm(x))


def _project(ops: CountingOperators, X: np.ndarray, mono) -> np.ndarray:
    for j, exc in enumerate(mono):
        X = ops.q_on(X, j) if exc else ops.p_on(X, j)
    return X


def _cols(ops: CountingOperators, mono) -> np.ndarray:
    m = np.ones(ops.dim, dtype=bool)
    for j, exc in enumerate(mono):
        e = ops.excited(j)
        m &= e if exc else ~e
    return m


def check_seed(cfg: IdentityConfig, s: int, rep: IdentityReport) -> None:
    rng = np.random.default_rng([cfg.seed, s])
    N = cfg.N
    grid = GridSpec(1, (cfg.extent,), (cfg.points,))
    D = 3 * cfg.points
    phi_f = random_spinor(grid, rng)
    phi = phi_f.to_vector()
    W = random_even_kernel(grid, rng, 2.0)
    V = random_even_kernel(grid, rng, 2.0)
    ops = CountingOperators(phi, N)
    psi = random_symmetric_state(N, D, rng)
    X = rng.standard_normal((ops.dim, cfg.n_vectors)) + 1j * rng.standard_normal((ops.dim, cfg.n_vectors))

    # alpha identities
    a = alpha(psi, phi, N, D)
    rep.record("alpha = <q1>", abs(a - np.vdot(psi, ops.q_on(psi, 0)).real), 1e-12)
    rep.record("alpha = <m>", abs(a - np.vdot(psi, ops.mhat(psi)).real), 1e-12)
    g = [reduce_one_body(psi, N, D, j).matrix for j in range(N)]
    rep.record("marginal independent of particle", max(np.abs(g[j] - g[0]).max() for j in range(N)), 1e-12)

    # resolution of identity and orthogonality
    Pk = ops.apply_functions([lambda c, k=k: (c == k).astype(float) for k in range(N + 1)], X)
    rep.record("sum_k P_k = 1", np.abs(sum(Pk) - X).max(), 1e-12)
    orth = 0.0
    for j in range(N + 1):
        for k in range(N + 1):
            PjPk = ops.P(j, Pk[k])
            orth = max(orth, np.abs(PjPk - (Pk[k] if j == k else 0)).max())
    rep.record("P_j P_k = delta_jk P_k", orth, 1e-12)

    # dense checks on the rotated basis
    R = ops.rotated_basis()
    shifts = range(-2, 3)
    mfun = [lambda c, d=d: (c + d) / N for d in shifts]
    nfun = [lambda c, d=d: np.sqrt(np.clip(c + d, 0, None) / N) for d in shifts]
    MR = dict(zip(shifts, ops.apply_functions(mfun, R)))
    NR = dict(zip(shifts, ops.apply_functions(nfun, R)))

    # counting operator m_d against weighted q-projector sums
    rep.record("m - m_d = -d/N", max(_fro(MR[0] - MR[d] + (d / N) * R) for d in shifts), 1e-12)

    # commutators with p_j (q_j = 1 - p_j gives the same norm)
    worst = 0.0
    for j in range(N):
        exc = ops.excited(j)
        for Y in list(MR.values()) + list(NR.values()):
            qYp = ops.q_on(Y[:, ~exc], j)
            pYq = ops.p_on(Y[:, exc], j)
            worst = max(worst, np.sqrt(_fro(qYp) ** 2 + _fro(pYq) ** 2))
    rep.record("[m_d, p_j] = [n_d, p_j] = 0", worst, 1e-12)

    # shifting a generic two-body operator through the counting weights
    C = rng.standard_normal((D * D, D * D)) + 1j * rng.standard_normal((D * D, D * D))
    C /= np.linalg.norm(C, 2)
    CR = apply_two_body(C, R, N, D)
    CMR = apply_two_body(C, MR[0], N, D)
    CNR = apply_two_body(C, NR[0], N, D)
    worst_m = worst_n = 0.0
    for b in MONOMIALS:
        cols = _cols(ops, b)
        ds = [d for d in shifts if 0 <= sum(b) - d <= 2]
        M_CR = dict(zip(ds, ops.apply_functions([mfun[d + 2] for d in ds], CR[:, cols])))
        N_CR = dict(zip(ds, ops.apply_functions([nfun[d + 2] for d in ds], CR[:, cols])))
        diff_m = {d: CMR[:, cols] - M_CR[d] for d in shifts if 0 <= sum(b) - d <= 2}
        diff_n = {d: CNR[:, cols] - N_CR[d] for d in shifts if 0 <= sum(b) - d <= 2}
        for a_ in MONOMIALS:
            d = sum(b) - sum(a_)
            worst_m = max(worst_m, _fro(_project(ops, diff_m[d], a_)))
            worst_n = max(worst_n, _fro(_project(ops, diff_n[d], a_)))
    rep.record("Q_a C m Q_b = Q_a m_d C Q_b", worst_m, 1e-12)
    rep.record("Q_a C n Q_b = Q_a n_d C Q_b", worst_n, 1e-12)

    # q-projector bounds against m_hat and its inverse
    inv_m = ops.mhat_inverse_q(ops.q_on(X, 0))
    n_inv = ops.nhat_inverse(ops.nhat_inverse(ops.q_on(X, 0)))
    rep.record("n^-2 q1 = m^-1 q1", np.abs(inv_m - n_inv).max(), 1e-12)
    rep.record("m m^-1 q1 = q1", np.abs(ops.mhat(inv_m) - ops.q_on(X, 0)).max(), 1e-12)
    lhs = np.vdot(psi, ops.mhat_inverse_q(ops.q_on(ops.q_on(psi, 1), 0))).real
    rhs = N / (N - 1) * np.vdot(psi, ops.mhat(psi)).real
    rep.record("<m^-1 q1 q2> - N/(N-1)<m>", lhs - rhs, 1e-12)
    rep.note("slack in m^-1 q1 q2 inequality", rhs - lhs)

    # cancellation identities on two particles
    sm = smear(phi_f, W, V)
    Wt, Vt = pair_table(W), pair_table(V)
    W12 = pair_operator(Wt, np.zeros_like(Vt))
    V12 = pair_operator(np.zeros_like(Wt), Vt)
    I = np.eye(D)
    p2 = np.kron(I, ops.p)
    one = {k: np.kron(one_body_multiplication(getattr(sm, k)), I) for k in ("Wphi", "Vphi", "Ephi", "Fphi")}
    rep.record("p2 W12 p2 = p2 Wphi_1", _fro(p2 @ W12 @ p2 - p2 @ one["Wphi"]), 1e-10)
    rep.record("p2 V12 s.s p2 = p2 Vphi_1", _fro(p2 @ V12 @ p2 - p2 @ one["Vphi"]), 1e-10)
    rep.record("p2 (V12 s.s)^2 p2 = p2 Ephi_1", _fro(p2 @ V12 @ V12 @ p2 - p2 @ one["Ephi"]), 1e-10)
    F = W12 + V12
    rep.record("p2 (W12 + V12 s.s)^2 p2 = p2 Fphi_1", _fro(p2 @ F @ F @ p2 - p2 @ one["Fphi"]), 1e-10)

    # derivative expansion: equal q-counts vanish
    h = one_body_multiplication(sm.Wphi) + one_body_multiplication(sm.Vphi)
    Fn = pair_operator(Wt, Vt)

    def A(Y):
        out = (N - 1) * apply_two_body(Fn, Y, N, D)
        return out - N * (apply_one_body(h, Y, 0, N) + apply_one_body(h, Y, 1, N))

    AMR = A(MR[0])
    AR = A(R)
    equal = 0.0
    unequal = np.inf
    for b in MONOMIALS:
        cols = _cols(ops, b)
        comm = AMR[:, cols] - ops.mhat(AR[:, cols])
        for a_ in MONOMIALS:
            val = _fro(_project(ops, comm, a_))
            if sum(a_) == sum(b):
                equal = max(equal, val)
            else:
                unequal = min(unequal, val)
    rep.record("equal-q terms of d/dt alpha vanish", equal, 1e-12)
    rep.note("smallest unequal-q term (nonzero)", unequal)


def run_identity_suite(cfg: IdentityConfig | None = None) -> IdentityReport:
    cfg = cfg or IdentityConfig()
    rep = IdentityReport(cfg)
    t0 = time.perf_counter()
    for s in range(cfg.n_seeds):
        check_seed(cfg, s, rep)
    rep.elapsed = time.perf_counter() - t0
    return rep
