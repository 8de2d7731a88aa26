"""Periodic grids, spinor/scalar/matrix fields, transforms and convolution.

Coordinates are cell-centred on a periodic box ``[-L/2, L/2)`` per axis, so
the origin sits on grid index ``n // 2``. Fourier modes follow the usual
``k = 2 pi m / L`` with ``m`` in ``[-n/2, n/2)`` (``numpy.fft`` order).
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GridMismatchError(ValueError):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    dim: int
    extent: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        ext = tuple(float(e) for e in np.broadcast_to(self.extent, (self.dim,)))
        pts = tuple(int(p) for p in np.broadcast_to(self.points, (self.dim,)))
        if any(e <= 0 for e in ext):
            raise ValueError("extent must be positive")
        if not all(_is_pow2(p) for p in pts):
            raise ValueError(f"points per axis must be powers of two, got {pts}")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "points", pts)

    @classmethod
    def cube(cls, dim: int, extent: float, points: int) -> "GridSpec":
        return cls(dim, (extent,) * dim, (points,) * dim)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / p for e, p in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    def axes(self) -> list[np.ndarray]:
        return [(np.arange(n) - n // 2) * h for n, h in zip(self.points, self.spacing)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x**2 for x in self.mesh()))

    def wavenumbers(self) -> list[np.ndarray]:
        return [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.points, self.spacing)]

    def k_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.wavenumbers(), indexing="ij")

    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.k_mesh())


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatchError(f"fields live on different grids: {a} vs {b}")


@dataclass
class ScalarField:
    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != self.grid.shape:
            raise GridMismatchError(f"data shape {self.data.shape} != grid {self.grid.shape}")

    def integral(self) -> complex:
        return self.data.sum() * self.grid.cell_volume

    def sup(self) -> float:
        return float(np.abs(self.data).max())


@dataclass
class MatrixField:
    """Pointwise 3x3 matrices, stored with shape ``(*points, 3, 3)``."""

    grid: GridSpec
    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != self.grid.shape + (3, 3):
            raise GridMismatchError(f"data shape {self.data.shape} incompatible with grid")

    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - np.swapaxes(self.data, -1, -2).conj()).max())

    def sup_opnorm(self) -> float:
        """max over points of the spectral norm of the local matrix."""
        if self.hermitian:
            return float(np.abs(np.linalg.eigvalsh(self.data)).max())
        return float(np.linalg.norm(self.data, ord=2, axis=(-2, -1)).max())

    def apply(self, phi: "SpinorField") -> "SpinorField":
        _check_same_grid(self.grid, phi.grid)
        return SpinorField(self.grid, np.einsum("...ij,j...->i...", self.data, phi.data))


@dataclass
class SpinorField:
    """Three complex components ``(u, v, w)``; ``data`` has shape ``(3, *points)``."""

    grid: GridSpec
    data: np.ndarray
    normalized: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (3,) + self.grid.shape:
            raise GridMismatchError(f"data shape {self.data.shape} incompatible with grid")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpinorField":
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex))

    @classmethod
    def gaussian(cls, grid: GridSpec, sigma: float, weights=(1.0, 1.0, 1.0),
                 center=None) -> "SpinorField":
        """Normalised (pi sigma^2)^(-d/4) exp(-|x|^2 / 2 sigma^2) times a unit spin vector."""
        w = np.asarray(weights, dtype=complex)
        w = w / np.linalg.norm(w)
        mesh = grid.mesh()
        c = np.zeros(grid.dim) if center is None else np.broadcast_to(center, (grid.dim,))
        r2 = sum((x - x0) ** 2 for x, x0 in zip(mesh, c))
        f = (np.pi * sigma**2) ** (-grid.dim / 4) * np.exp(-r2 / (2 * sigma**2))
        return cls(grid, np.einsum("s,...->s...", w, f))

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.data.copy(), self.normalized)

    @property
    def u(self):
        return self.data[0]

    @property
    def v(self):
        return self.data[1]

    @property
    def w(self):
        return self.data[2]

    def density(self) -> np.ndarray:
        return (np.abs(self.data) ** 2).sum(axis=0)

    def normalize(self) -> "SpinorField":
        return SpinorField(self.grid, self.data / l2_norm(self), True)

    def inner(self, other: "SpinorField") -> complex:
        _check_same_grid(self.grid, other.grid)
        return np.vdot(self.data, other.data) * self.grid.cell_volume

    def to_vector(self) -> np.ndarray:
        """Orthonormal-basis coefficients, index ``point * 3 + spin``.

        Basis functions are cell indicators scaled by ``1/sqrt(cell_volume)``,
        so the Euclidean norm of the result equals the L^2 norm of the field.
        """
        return np.moveaxis(self.data, 0, -1).reshape(-1) * np.sqrt(self.grid.cell_volume)

    @classmethod
    def from_vector(cls, grid: GridSpec, vec: np.ndarray) -> "SpinorField":
        data = np.asarray(vec).reshape(grid.shape + (3,)) / np.sqrt(grid.cell_volume)
        return cls(grid, np.moveaxis(data, -1, 0))


def _spatial_axes(grid: GridSpec, lead: int = 1) -> tuple[int, ...]:
    return tuple(range(lead, lead + grid.dim))


def fft_field(f: SpinorField) -> np.ndarray:
    return np.fft.fftn(f.data, axes=_spatial_axes(f.grid))


def ifft_field(grid: GridSpec, fk: np.ndarray) -> SpinorField:
    return SpinorField(grid, np.fft.ifftn(fk, axes=_spatial_axes(grid)))


def l2_norm(f: SpinorField) -> float:
    return float(np.sqrt((np.abs(f.data) ** 2).sum() * f.grid.cell_volume))


def l2_norm_fourier(f: SpinorField) -> float:
    """Same norm evaluated through Parseval."""
    fk = fft_field(f)
    return float(np.sqrt((np.abs(fk) ** 2).sum() * f.grid.cell_volume / f.grid.size))


def grad_norm(f: SpinorField) -> float:
    """H^1 seminorm ||grad f|| by spectral differentiation."""
    fk = fft_field(f)
    k2 = f.grid.k_squared()
    return float(np.sqrt((k2 * (np.abs(fk) ** 2)).sum() * f.grid.cell_volume / f.grid.size))


def laplacian(f: SpinorField) -> SpinorField:
    fk = fft_field(f)
    return ifft_field(f.grid, -f.grid.k_squared() * fk)


def gradient(f: SpinorField) -> list[SpinorField]:
    fk = fft_field(f)
    return [ifft_field(f.grid, 1j * k * fk) for k in f.grid.k_mesh()]


def periodic_convolve(kernel: ScalarField, density: ScalarField) -> ScalarField:
    """Circular convolution ``(K * rho)(x) = sum_y K(x - y) rho(y) dV``.

    The kernel is sampled on the grid's centred coordinates, i.e. the
    kernel value at displacement 0 sits at index ``n // 2``.
    """
    _check_same_grid(kernel.grid, density.grid)
    g = kernel.grid
    K = np.fft.fftn(np.fft.ifftshift(kernel.data))
    out = np.fft.ifftn(K * np.fft.fftn(density.data)) * g.cell_volume
    if np.isrealobj(kernel.data) and np.isrealobj(density.data):
        out = out.real
    return ScalarField(g, out)


def convolve_many(kernel: np.ndarray, grid: GridSpec, densities: np.ndarray) -> np.ndarray:
    """Broadcast convolution of kernels ``(..., *points)`` with densities ``(..., *points)``."""
    kernel = np.asarray(kernel)
    kaxes = tuple(range(kernel.ndim - grid.dim, kernel.ndim))
    daxes = tuple(range(densities.ndim - grid.dim, densities.ndim))
    K = np.fft.fftn(np.fft.ifftshift(kernel, axes=kaxes), axes=kaxes)
    rho_k = np.fft.fftn(densities, axes=daxes)
    out_axes = tuple(range(-grid.dim, 0))
    return np.fft.ifftn(K * rho_k, axes=out_axes) * grid.cell_volume


def direct_convolve(kernel: ScalarField, density: ScalarField) -> ScalarField:
    """O(n^2) reference implementation of :func:`periodic_convolve`."""
    _check_same_grid(kernel.grid, density.grid)
    g = kernel.grid
    out = np.zeros(g.shape, dtype=np.result_type(kernel.data, density.data))
    for x in np.ndindex(*g.shape):
        acc = 0.0
        for y in np.ndindex(*g.shape):
            k = tuple((xi - yi + n // 2) % n for xi, yi, n in zip(x, y, g.points))
            acc += kernel.data[k] * density.data[y]
        out[x] = acc * g.cell_volume
    return ScalarField(g, out)


def save_field_csv(f: SpinorField, path: str | Path) -> None:
    """Header lines (dim, extent, points) then one row per point, row-major:
    ``re_u,im_u,re_v,im_v,re_w,im_w``."""
    g = f.grid
    rows = np.moveaxis(f.data, 0, -1).reshape(-1, 3)
    table = np.column_stack([rows.real[:, 0], rows.imag[:, 0], rows.real[:, 1],
                             rows.imag[:, 1], rows.real[:, 2], rows.imag[:, 2]])
    buf = io.StringIO()
    buf.write(f"# dim={g.dim}\n")
    buf.write("# extent=" + ",".join(repr(e) for e in g.extent) + "\n")
    buf.write("# points=" + ",".join(str(p) for p in g.points) + "\n")
    buf.write("re_u,im_u,re_v,im_v,re_w,im_w\n")
    np.savetxt(buf, table, delimiter=",", fmt="%.17g")
    Path(path).write_text(buf.getvalue())


def load_field_csv(path: str | Path) -> SpinorField:
    meta = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition("=")
            meta[key] = val
    grid = GridSpec(int(meta["dim"]), tuple(float(x) for x in meta["extent"].split(",")),
                    tuple(int(x) for x in meta["points"].split(",")))
    table = np.loadtxt(path, delimiter=",", comments="#", skiprows=4, ndmin=2)
    rows = table[:, 0::2] + 1j * table[:, 1::2]
    return SpinorField(grid, np.moveaxis(rows.reshape(grid.shape + (3,)), -1, 0))
