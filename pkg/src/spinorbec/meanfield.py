"""Spinor Hartree and spinor Gross-Pitaevskii time evolution.

Units: hbar = 1, 2m = 1, so the equation is

    i d/dt phi = -Laplacian phi + M[phi](x) phi

with the pointwise Hermitian 3x3 matrix

    M = (W * rho) I + sum_l (V * m_l) s_l        (Convolution)
    M = g0 rho I + g2 sum_l m_l s_l              (Contact)

where rho = |u|^2 + |v|^2 + |w|^2 and m_l = <phi, s_l phi>.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from .grids import GridMismatchError, ScalarField, SpinorField, convolve_many, fft_field, \
    grad_norm, ifft_field, l2_norm, laplacian
from .spin import spin_density, spin_dot_sigma


class NormDriftError(RuntimeError):
    pass


@dataclass(frozen=True)
class Convolution:
    W: ScalarField
    V: ScalarField

    @property
    def has_spin_coupling(self) -> bool:
        return bool(np.any(self.V.data != 0))


@dataclass(frozen=True)
class Contact:
    g0: float
    g2: float

    @classmethod
    def from_scattering_lengths(cls, c0: float, c2: float) -> "Contact":
        return cls(8 * math.pi * c0, 8 * math.pi * c2)

    @property
    def c0(self) -> float:
        return self.g0 / (8 * math.pi)

    @property
    def c2(self) -> float:
        return self.g2 / (8 * math.pi)


NonlinearityKind = Union[Convolution, Contact]


@dataclass
class SolverConfig:
    dt: float
    t_end: float
    scheme: str = "strang"
    stride: int = 1
    norm_tol: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.scheme != "strang":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class EnergyReport:
    kinetic: float
    density_interaction: float
    spin_interaction: float
    magnetization_z: float
    norm: float = 1.0
    total: float = field(init=False)

    def __post_init__(self):
        self.total = self.kinetic + self.density_interaction + self.spin_interaction


@dataclass
class Snapshot:
    t: float
    phi: SpinorField
    energy: EnergyReport


def _check_kind(phi: SpinorField, kind) -> None:
    if isinstance(kind, Convolution):
        if kind.W.grid != phi.grid or kind.V.grid != phi.grid:
            raise GridMismatchError("kernels and spinor live on different grids")
    elif not isinstance(kind, Contact):
        raise TypeError(f"unknown nonlinearity {kind!r}")


def local_matrix(phi: SpinorField, kind: NonlinearityKind) -> np.ndarray:
    """The pointwise Hermitian matrix M[phi](x), shape ``(*points, 3, 3)``."""
    rho = phi.density()
    m = spin_density(phi.data)
    if isinstance(kind, Contact):
        scal = kind.g0 * rho
        vec = kind.g2 * m
    else:
        scal = convolve_many(kind.W.data, phi.grid, rho).real
        vec = convolve_many(kind.V.data, phi.grid, m).real
    return scal[..., None, None] * np.eye(3) + spin_dot_sigma(vec)


def rhs(phi: SpinorField, kind: NonlinearityKind) -> SpinorField:
    """-Laplacian phi + M[phi] phi (so that i d/dt phi = rhs)."""
    _check_kind(phi, kind)
    lap = laplacian(phi)
    Mphi = np.einsum("...ij,j...->i...", local_matrix(phi, kind), phi.data)
    return SpinorField(phi.grid, -lap.data + Mphi)


def _apply_unitary(M: np.ndarray, tau: float, data: np.ndarray) -> np.ndarray:
    """exp(-i tau M(x)) applied pointwise, via Hermitian eigendecomposition."""
    lam, U = np.linalg.eigh(M)
    coef = np.einsum("...ji,j...->...i", U.conj(), data)
    coef = coef * np.exp(-1j * tau * lam)
    return np.einsum("...ij,...j->i...", U, coef)


def kinetic_propagator(phi: SpinorField, tau: float) -> np.ndarray:
    return np.exp(-1j * tau * phi.grid.k_squared())


def _kinetic(phi: SpinorField, phase: np.ndarray) -> SpinorField:
    return ifft_field(phi.grid, fft_field(phi) * phase)


def nonlinear_step(phi: SpinorField, kind: NonlinearityKind, dt: float,
                   midpoint: bool | None = None) -> SpinorField:
    """Advance i d/dt phi = M[phi] phi by dt, pointwise unitary.

    For contact couplings and for V = 0 the local density and spin vector
    are invariant under this flow, so the matrix frozen at the start is
    exact. Otherwise the matrix is re-evaluated at the exponential midpoint.
    """
    if midpoint is None:
        midpoint = isinstance(kind, Convolution) and kind.has_spin_coupling
    M = local_matrix(phi, kind)
    if midpoint:
        half = SpinorField(phi.grid, _apply_unitary(M, 0.5 * dt, phi.data))
        M = local_matrix(half, kind)
    return SpinorField(phi.grid, _apply_unitary(M, dt, phi.data))


def step_strang(phi: SpinorField, kind: NonlinearityKind, dt: float,
                _half_phase: np.ndarray | None = None) -> SpinorField:
    """One Strang step: half kinetic, full nonlinear, half kinetic."""
    half = kinetic_propagator(phi, 0.5 * dt) if _half_phase is None else _half_phase
    phi = _kinetic(phi, half)
    phi = nonlinear_step(phi, kind, dt)
    return _kinetic(phi, half)


def hartree_energy(phi: SpinorField, W: ScalarField, V: ScalarField) -> EnergyReport:
    g = phi.grid
    dv = g.cell_volume
    rho = phi.density()
    m = spin_density(phi.data)
    Wphi = convolve_many(W.data, g, rho).real
    Vm = convolve_many(V.data, g, m).real
    return EnergyReport(
        kinetic=grad_norm(phi) ** 2,
        density_interaction=0.5 * float((Wphi * rho).sum() * dv),
        spin_interaction=0.5 * float((Vm * m).sum() * dv),
        magnetization_z=magnetization_z(phi),
        norm=l2_norm(phi),
    )


def gp_energy(phi: SpinorField, c0: float, c2: float) -> EnergyReport:
    dv = phi.grid.cell_volume
    rho = phi.density()
    m = spin_density(phi.data)
    return EnergyReport(
        kinetic=grad_norm(phi) ** 2,
        density_interaction=4 * math.pi * c0 * float((rho**2).sum() * dv),
        spin_interaction=4 * math.pi * c2 * float((m**2).sum() * dv),
        magnetization_z=magnetization_z(phi),
        norm=l2_norm(phi),
    )


def energy(phi: SpinorField, kind: NonlinearityKind) -> EnergyReport:
    if isinstance(kind, Contact):
        return gp_energy(phi, kind.c0, kind.c2)
    return hartree_energy(phi, kind.W, kind.V)


def magnetization_z(phi: SpinorField) -> float:
    a = np.abs(phi.data) ** 2
    return float((a[0] - a[2]).sum() * phi.grid.cell_volume)


class Stepper:
    """Reusable Strang stepper with a cached kinetic phase."""

    def __init__(self, kind: NonlinearityKind, dt: float):
        self.kind = kind
        self.dt = dt
        self._phase = None
        self._grid = None

    def __call__(self, phi: SpinorField) -> SpinorField:
        if self._grid != phi.grid:
            self._phase = kinetic_propagator(phi, 0.5 * self.dt)
            self._grid = phi.grid
        return step_strang(phi, self.kind, self.dt, self._phase)


def evolve(phi0: SpinorField, kind: NonlinearityKind, cfg: SolverConfig) -> list[Snapshot]:
    """Integrate to ``cfg.t_end``; snapshots every ``cfg.stride`` steps plus the last one.

    The step is adjusted to ``t_end / n_steps`` so the run lands on t_end.
    """
    _check_kind(phi0, kind)
    n = cfg.n_steps
    dt = cfg.t_end / n if n else cfg.dt
    step = Stepper(kind, dt)
    n0 = l2_norm(phi0)
    phi = phi0
    out = [Snapshot(0.0, phi0, energy(phi0, kind))]
    for i in range(1, n + 1):
        phi = step(phi)
        if i % cfg.stride == 0 or i == n:
            e = energy(phi, kind)
            drift = abs(e.norm - n0)
            if drift > cfg.norm_tol:
                raise NormDriftError(f"norm drift {drift:.3e} > {cfg.norm_tol:.1e} at "
                                     f"step {i} (t = {i * dt:.6g}); last energy {e}")
            out.append(Snapshot(i * dt, phi, e))
    return out


TRAJECTORY_COLUMNS = ["t", "norm", "E_kin", "E_dens", "E_spin", "E_tot", "M_z"]


def write_trajectory_csv(traj: list[Snapshot], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for s in traj:
            e = s.energy
            w.writerow([repr(float(x)) for x in (s.t, e.norm, e.kinetic, e.density_interaction,
                                                  e.spin_interaction, e.total, e.magnetization_z)])


__all__ = [
    "Convolution", "Contact", "NonlinearityKind", "SolverConfig", "EnergyReport", "Snapshot",
    "NormDriftError", "rhs", "step_strang", "nonlinear_step", "evolve", "hartree_energy",
    "gp_energy", "energy", "magnetization_z", "local_matrix", "Stepper", "write_trajectory_csv",
]
