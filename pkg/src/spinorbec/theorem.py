"""Side-by-side many-body and Hartree evolution on a small 1D grid.

Runs the exact N-body dynamics next to the spinor Hartree flow with the same
kernels, and records how far the one-body marginal drifts from the
condensate: alpha(t), the trace distance, and an exponential envelope
(K+1)/N e^{Ct} with C fitted from the data.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grids import GridSpec, SpinorField
from .manybody import (alpha, build_hamiltonian, perturbed_product_state, product_state, propagate,
                       reduce_one_body, trace_distance)
from .meanfield import Convolution, Stepper, hartree_energy
from .potentials import kernel_from_config


@dataclass
class TheoremConfig:
    N: int = 2
    points: int = 16
    extent: float = 12.0
    W: dict = field(default_factory=lambda: {"type": "soft_sphere", "W0": 3.0, "R": 1.5})
    V: dict = field(default_factory=lambda: {"type": "soft_sphere", "W0": -1.5, "R": 1.5})
    sigma: float = 1.0
    weights: tuple = (1.0, 1.0, 1.0)
    center: float = 0.0
    K: float = 0.0
    T: float = 1.0
    n_snapshots: int = 10
    mf_substeps: int = 200
    tol: float = 1e-10
    krylov_dim: int = 30
    method: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.N not in (2, 3, 4):
            raise ValueError("the oracle experiment runs N in {2, 3, 4}")
        if self.T <= 0 or self.n_snapshots < 1:
            raise ValueError("need T > 0 and at least one snapshot")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["weights"] = [str(w) for w in self.weights]
        return d


@dataclass
class TheoremReport:
    config: TheoremConfig
    times: np.ndarray
    alpha: np.ndarray
    trace_distance: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    mf_energy: np.ndarray
    C: float
    elapsed: float = 0.0

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def bound(self) -> np.ndarray:
        return envelope(self.config.K, self.N, self.C, self.times)

    def sandwich_violation(self) -> float:
        """Largest violation of alpha <= Tr|.| <= 2 sqrt(alpha) (<= 0 when it holds)."""
        a = np.clip(self.alpha, 0, None)
        lo = self.alpha - self.trace_distance
        hi = self.trace_distance - 2 * np.sqrt(a)
        return float(max(lo.max(), hi.max()))

    @property
    def sup_alpha(self) -> float:
        return float(self.alpha.max())

    def write_csv(self, path: str | Path, C: float | None = None) -> None:
        C = self.C if C is None else C
        b = envelope(self.config.K, self.N, C, self.times)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "alpha", "trace_distance", "bound", "energy", "norm"])
            for row in zip(self.times, self.alpha, self.trace_distance, b, self.energy, self.norm):
                w.writerow([f"{float(x):.15e}" for x in row])


def envelope(K: float, N: int, C: float, t) -> np.ndarray:
    return (K + 1) / N * np.exp(C * np.asarray(t, dtype=float))


def fit_rate(reports: list[TheoremReport]) -> float:
    """Smallest C >= 0 with alpha_N(t) <= (K+1)/N e^{Ct} at every snapshot of every report."""
    C = 0.0
    for r in reports:
        K = r.config.K
        for t, a in zip(r.times, r.alpha):
            if a <= 0:
                continue
            ratio = r.N * a / (K + 1)
            if t == 0:
                if ratio > 1 + 1e-12:
                    raise ValueError("alpha(0) exceeds (K+1)/N; no rate can fix that")
                continue
            C = max(C, math.log(ratio) / t)
    # a hair above the tightest value so the envelope dominates strictly
    return C * (1 + 1e-9) + 1e-12


def initial_states(cfg: TheoremConfig):
    grid = GridSpec(1, (cfg.extent,), (cfg.points,))
    phi0 = SpinorField.gaussian(grid, cfg.sigma, cfg.weights, (cfg.center,)).normalize()
    v = phi0.to_vector()
    if cfg.K == 0:
        psi0 = product_state(v, cfg.N)
    else:
        rng = np.random.default_rng(cfg.seed)
        chi = rng.standard_normal(v.size) + 1j * rng.standard_normal(v.size)
        psi0 = perturbed_product_state(v, chi, cfg.N, cfg.K)
    return grid, phi0, psi0


def run_theorem_experiment(cfg: TheoremConfig, progress=None) -> TheoremReport:
    t0 = time.perf_counter()
    grid, phi, psi = initial_states(cfg)
    W = kernel_from_config(cfg.W, grid)
    V = kernel_from_config(cfg.V, grid)
    H = build_hamiltonian(grid, cfg.N, W, V, "mean_field")
    kind = Convolution(W, V)
    D = 3 * cfg.points
    dt_snap = cfg.T / cfg.n_snapshots
    step = Stepper(kind, dt_snap / cfg.mf_substeps)

    times, al, td, en, nm, mfe = [], [], [], [], [], []

    def record(t):
        v = phi.to_vector()
        g = reduce_one_body(psi, cfg.N, D)
        times.append(t)
        al.append(alpha(psi, v, cfg.N, D))
        td.append(trace_distance(g, v))
        en.append(H.expectation(psi) / cfg.N)
        nm.append(float(np.linalg.norm(psi)))
        mfe.append(hartree_energy(phi, W, V).total)
        if progress:
            progress(t, al[-1])

    record(0.0)
    for i in range(1, cfg.n_snapshots + 1):
        psi = propagate(H, psi, dt_snap, cfg.tol, cfg.method, cfg.krylov_dim)
        for _ in range(cfg.mf_substeps):
            phi = step(phi)
        record(i * dt_snap)
    rep = TheoremReport(cfg, np.array(times), np.array(al), np.array(td), np.array(en),
                        np.array(nm), np.array(mfe), 0.0)
    rep.C = fit_rate([rep])
    rep.elapsed = time.perf_counter() - t0
    return rep
