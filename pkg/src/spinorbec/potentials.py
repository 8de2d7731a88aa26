"""Interaction kernels, scattering lengths and the smeared one-body potentials."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grids import GridMismatchError, GridSpec, MatrixField, ScalarField, SpinorField, \
    convolve_many, grad_norm, l2_norm
from .spin import bullet_pair
from .units import HBAR, PhysicalParams

# 1 / (3/4 (2 pi^2)^(2/3)), the sharp Sobolev constant in 3D, rounded as 0.18
SOBOLEV_EXACT = 1.0 / (0.75 * (2 * math.pi**2) ** (2.0 / 3.0))
SOBOLEV_CONSTANT = 0.18


def ball_volume(R: float, dim: int = 3) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * R**dim


@dataclass(frozen=True)
class SoftSphere:
    """W(x) = W0 for |x| < R, 0 otherwise."""

    W0: float
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("soft-sphere radius must be positive")

    @classmethod
    def from_integral(cls, integral: float, R: float, dim: int) -> "SoftSphere":
        return cls(integral / ball_volume(R, dim), R)

    @property
    def support_radius(self) -> float:
        return self.R

    def __call__(self, r):
        return np.where(np.asarray(r) < self.R, self.W0, 0.0)

    def lp_norm(self, p: float, dim: int = 3) -> float:
        if math.isinf(p):
            return abs(self.W0)
        return abs(self.W0) * ball_volume(self.R, dim) ** (1.0 / p)

    def integral(self, dim: int = 3) -> float:
        return self.W0 * ball_volume(self.R, dim)

    def sample(self, grid: GridSpec) -> ScalarField:
        return sample_radial(self, grid)


@dataclass(frozen=True)
class GPScaled:
    """x -> N^2 base(N x)."""

    base: object
    N: float

    @property
    def support_radius(self) -> float:
        return self.base.support_radius / self.N

    def __call__(self, r):
        return self.N**2 * self.base(self.N * np.asarray(r))

    def under_resolved(self, grid: GridSpec) -> bool:
        return self.support_radius < 2 * min(grid.spacing)

    def sample(self, grid: GridSpec) -> ScalarField:
        return sample_radial(self, grid)


def sample_radial(pot, grid: GridSpec) -> ScalarField:
    """Midpoint sampling of a radial potential on the grid's centred coordinates."""
    support = getattr(pot, "support_radius", None)
    if support is not None and min(grid.extent) < 4 * support:
        warnings.warn(f"extent {min(grid.extent)} < 4 R = {4 * support}: "
                      "periodic images of the kernel interact", RuntimeWarning, stacklevel=3)
    return ScalarField(grid, np.asarray(pot(grid.radius()), dtype=float))


def gp_scaled(pot, N: float, grid: GridSpec | None = None) -> GPScaled:
    """Gross-Pitaevskii rescaling of a radial potential.

    With ``grid`` given, a :class:`RuntimeWarning` is emitted when the
    rescaled support spans fewer than two cells.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    out = GPScaled(pot, N)
    if grid is not None and out.under_resolved(grid):
        warnings.warn(f"GP-scaled support {out.support_radius:g} under-resolved on grid "
                      f"spacing {min(grid.spacing):g}", RuntimeWarning, stacklevel=2)
    return out


def delta_kernel(grid: GridSpec, strength: float = 1.0) -> ScalarField:
    data = np.zeros(grid.shape)
    data[tuple(n // 2 for n in grid.points)] = strength / grid.cell_volume
    return ScalarField(grid, data)


def zero_kernel(grid: GridSpec) -> ScalarField:
    return ScalarField(grid, np.zeros(grid.shape))


def kernel_from_config(kc: dict, grid: GridSpec) -> ScalarField:
    """Build a sampled kernel from ``{type: soft_sphere | delta | file | zero, ...}``."""
    kind = kc.get("type", "soft_sphere")
    if kind == "soft_sphere":
        if "integral" in kc:
            ss = SoftSphere.from_integral(float(kc["integral"]), float(kc["R"]), grid.dim)
        else:
            ss = SoftSphere(float(kc["W0"]), float(kc["R"]))
        return ss.sample(grid)
    if kind == "delta":
        return delta_kernel(grid, float(kc.get("W0", kc.get("strength", 1.0))))
    if kind == "zero":
        return zero_kernel(grid)
    if kind == "file":
        data = np.loadtxt(Path(kc["path"]), delimiter=",", comments="#", ndmin=1)
        if data.size != grid.size:
            raise GridMismatchError(f"kernel file has {data.size} samples, grid has {grid.size}")
        return ScalarField(grid, data.reshape(grid.shape))
    raise ValueError(f"unknown kernel type {kind!r}")


def scattering_length_exact(s: SoftSphere, mass: float, n_particles: float,
                            hbar: float = HBAR) -> float:
    """Zero-energy scattering length of the soft sphere W0/n_particles of radius R."""
    if s.W0 < 0:
        raise ValueError("scattering_length_exact needs W0 >= 0 (repulsive soft sphere)")
    if s.W0 == 0:
        return 0.0
    kR = math.sqrt(s.W0 * mass / (n_particles * hbar**2)) * s.R
    return s.R * (1.0 - math.tanh(kR) / kR)


def born_w0(c0: float, R: float, mass: float, n_particles: float, hbar: float = HBAR) -> float:
    """Soft-sphere height whose first Born scattering length equals ``c0``."""
    if min(c0, R, mass, n_particles) <= 0:
        raise ValueError("born_w0 arguments must be positive")
    return 3.0 * c0 * hbar**2 * n_particles / (mass * R**3)


def born_height_signed(c: float, R: float, mass: float, n_particles: float,
                       hbar: float = HBAR) -> float:
    """Signed version of :func:`born_w0`, used for the spin channel (c2 < 0)."""
    return 3.0 * c * hbar**2 * n_particles / (mass * R**3)


def physical_kernels(p: PhysicalParams, R: float | None = None) -> tuple[SoftSphere, SoftSphere]:
    """Soft spheres W, V in SI fitted by the Born formula to c0 and c2."""
    R = p.size_R if R is None else R
    W = SoftSphere(born_w0(p.c0, R, p.mass, p.n_exp, p.hbar), R)
    V = SoftSphere(born_height_signed(p.c2, R, p.mass, p.n_exp, p.hbar), R)
    return W, V


@dataclass
class SmearedSet:
    Wphi: ScalarField
    Vphi: MatrixField
    Dphi: ScalarField
    Ephi: MatrixField
    Fphi: MatrixField


def _check(phi: SpinorField, *kernels: ScalarField) -> None:
    for k in kernels:
        if k.grid != phi.grid:
            raise GridMismatchError("kernel and spinor live on different grids")


def contract_second_factor(kernel: np.ndarray, phi: SpinorField, B: np.ndarray) -> np.ndarray:
    """Pointwise 3x3 matrix  M(x) = <phi(.)|_2 K(x - .) B |phi(.)>_2.

    ``B`` is a 9x9 operator on C^3 (x) C^3 whose second factor is
    contracted against phi. Returns shape ``(*points, 3, 3)``.
    """
    g = phi.grid
    rho = np.einsum("j...,l...->jl...", phi.data.conj(), phi.data)
    conv = convolve_many(kernel, g, rho)
    return np.einsum("ijkl,jl...->...ik", B.reshape(3, 3, 3, 3), conv)


def smear(phi: SpinorField, W: ScalarField, V: ScalarField) -> SmearedSet:
    """All five smeared potentials of ``phi`` for kernels W, V."""
    _check(phi, W, V)
    g = phi.grid
    B = bullet_pair().matrix
    rho = phi.density()
    dens = convolve_many(np.stack([W.data, W.data**2]), g, rho[None])
    Wphi = ScalarField(g, dens[0].real)
    Dphi = ScalarField(g, dens[1].real)
    Vm = contract_second_factor(V.data, phi, B)
    Em = contract_second_factor(V.data**2, phi, B @ B)
    Fm = (Dphi.data[..., None, None] * np.eye(3)
          + contract_second_factor(2 * W.data * V.data, phi, B) + Em)
    return SmearedSet(Wphi, MatrixField(g, Vm, True), Dphi, MatrixField(g, Em, True),
                      MatrixField(g, Fm, True))


def lp_norm_sampled(kernel: ScalarField, p: float) -> float:
    a = np.abs(kernel.data)
    if math.isinf(p):
        return float(a.max())
    return float((a**p).sum() * kernel.grid.cell_volume) ** (1.0 / p)


@dataclass
class YoungReport:
    w_inf: float
    w_32: float
    w_3: float
    grad_phi: float
    norm_phi: float
    young_W: float        # ||W||_inf ||phi||^2
    young_D: float        # ||W||_inf^2 ||phi||^2
    sobolev_W: float      # 0.18 ||W||_{3/2} ||grad phi||^2
    sobolev_D: float      # 0.18 ||W||_3^2 ||grad phi||^2
    sup_Wphi: float
    sup_Dphi: float
    v_inf: float = 0.0
    sup_Vphi: float = 0.0
    sup_Ephi: float = 0.0
    sup_Fphi: float = 0.0
    young_V: float = 0.0  # ||V||_inf ||phi||^2
    young_E: float = 0.0  # 4 ||V||_inf^2 ||phi||^2
    young_F: float = 0.0  # (||W||_inf + 2 ||V||_inf)^2 ||phi||^2

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def young_opnorm_bounds(W, V, phi: SpinorField) -> YoungReport:
    """Operator-norm bounds on the smeared potentials next to their true sup norms.

    ``W`` and ``V`` may be :class:`SoftSphere` (analytic L^p norms, sampled
    on phi's grid for the true values) or sampled :class:`ScalarField`.
    The 0.18 Sobolev bounds are only meaningful for 3D fields.
    """
    g = phi.grid

    def norms(K):
        if K is None:
            return zero_kernel(g), 0.0, 0.0, 0.0
        if isinstance(K, ScalarField):
            return K, lp_norm_sampled(K, math.inf), lp_norm_sampled(K, 1.5), lp_norm_sampled(K, 3)
        return K.sample(g), K.lp_norm(math.inf, g.dim), K.lp_norm(1.5, g.dim), K.lp_norm(3, g.dim)

    Ws, w_inf, w_32, w_3 = norms(W)
    Vs, v_inf, _, _ = norms(V)
    sm = smear(phi, Ws, Vs)
    gn = grad_norm(phi)
    nrm2 = l2_norm(phi) ** 2
    return YoungReport(
        w_inf=w_inf, w_32=w_32, w_3=w_3, grad_phi=gn, norm_phi=math.sqrt(nrm2),
        young_W=w_inf * nrm2, young_D=w_inf**2 * nrm2,
        sobolev_W=SOBOLEV_CONSTANT * w_32 * gn**2,
        sobolev_D=SOBOLEV_CONSTANT * w_3**2 * gn**2,
        sup_Wphi=sm.Wphi.sup(), sup_Dphi=sm.Dphi.sup(),
        v_inf=v_inf, sup_Vphi=sm.Vphi.sup_opnorm(), sup_Ephi=sm.Ephi.sup_opnorm(),
        sup_Fphi=sm.Fphi.sup_opnorm(),
        young_V=v_inf * nrm2, young_E=4 * v_inf**2 * nrm2,
        young_F=(w_inf + 2 * v_inf) ** 2 * nrm2,
    )
