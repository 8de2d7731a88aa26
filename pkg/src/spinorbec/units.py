"""Physical constants, the Rb-87 experimental preset, and unit conversion.

Solvers and the many-body oracle work in units where hbar = 1 and 2m = 1,
so the one-body kinetic operator is exactly -Laplacian. The bound
calculator in :mod:`spinorbec.bounds` works directly in SI.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

HBAR = 1.054571817e-34  # J s (CODATA 2018)
ANGSTROM = 1e-10  # m


class UnitMismatchError(ValueError):
    pass


# Dimension exponents are (length, mass, time).
DIMS = {
    "dimensionless": (0, 0, 0),
    "length": (1, 0, 0),
    "mass": (0, 1, 0),
    "time": (0, 0, 1),
    "energy": (2, 1, -2),
    "rate": (0, 0, -1),
    "action": (2, 1, -1),
    "wavenumber": (-1, 0, 0),
    "density": (-3, 0, 0),
    "area": (2, 0, 0),
}


def _dims_name(dims):
    for name, d in DIMS.items():
        if d == dims:
            return name
    return "L^%d M^%d T^%d" % dims


@dataclass(frozen=True)
class Quantity:
    """A scalar tagged with its (length, mass, time) dimension exponents."""

    value: float
    dims: tuple[int, int, int] = (0, 0, 0)

    @classmethod
    def of(cls, value: float, kind: str) -> "Quantity":
        return cls(float(value), DIMS[kind])

    @property
    def kind(self) -> str:
        return _dims_name(self.dims)

    def _check(self, other: "Quantity") -> None:
        if not isinstance(other, Quantity):
            raise UnitMismatchError(f"cannot combine {self.kind} with untagged {other!r}")
        if other.dims != self.dims:
            raise UnitMismatchError(f"cannot combine {self.kind} with {other.kind}")

    def __add__(self, other):
        self._check(other)
        return Quantity(self.value + other.value, self.dims)

    def __sub__(self, other):
        self._check(other)
        return Quantity(self.value - other.value, self.dims)

    def __mul__(self, other):
        if isinstance(other, Quantity):
            return Quantity(self.value * other.value,
                            tuple(a + b for a, b in zip(self.dims, other.dims)))
        return Quantity(self.value * other, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Quantity):
            return Quantity(self.value / other.value,
                            tuple(a - b for a, b in zip(self.dims, other.dims)))
        return Quantity(self.value / other, self.dims)

    def __pow__(self, n: int):
        return Quantity(self.value ** n, tuple(a * n for a in self.dims))

    def __float__(self):
        if self.dims != (0, 0, 0):
            raise UnitMismatchError(f"{self.kind} quantity is not dimensionless")
        return self.value


@dataclass(frozen=True)
class UnitSystem:
    """Base scales for length, mass and time.

    ``mode == "SI"`` means every scale is one. The dimensionless mode is
    built with :meth:`dimensionless`, which fixes hbar = 1 and 2m = 1 for a
    chosen length scale.
    """

    length_scale: float = 1.0
    mass_scale: float = 1.0
    time_scale: float = 1.0
    mode: str = "SI"

    @classmethod
    def si(cls) -> "UnitSystem":
        return cls()

    @classmethod
    def dimensionless(cls, length_scale: float, mass: float, hbar: float = HBAR) -> "UnitSystem":
        if length_scale <= 0 or mass <= 0:
            raise ValueError("length scale and mass must be positive")
        energy = hbar**2 / (2.0 * mass * length_scale**2)
        return cls(length_scale, 2.0 * mass, hbar / energy, "dimensionless")

    @property
    def energy_scale(self) -> float:
        return self.mass_scale * self.length_scale**2 / self.time_scale**2

    def scale_of(self, dims) -> float:
        L, M, T = dims
        return self.length_scale**L * self.mass_scale**M * self.time_scale**T


def to_dimensionless(q: Quantity, u: UnitSystem, kind: str | None = None) -> float:
    """Express ``q`` as a pure number in the unit system ``u``.

    If ``kind`` is given, ``q`` must carry exactly that dimension.
    """
    if not isinstance(q, Quantity):
        raise UnitMismatchError(f"expected a tagged Quantity, got {type(q).__name__}")
    if kind is not None and q.dims != DIMS[kind]:
        raise UnitMismatchError(f"expected {kind}, got {q.kind}")
    return q.value / u.scale_of(q.dims)


def from_dimensionless(x: float, u: UnitSystem, kind) -> Quantity:
    dims = DIMS[kind] if isinstance(kind, str) else tuple(kind)
    return Quantity(float(x) * u.scale_of(dims), dims)


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental parameters in SI units.

    ``c0`` and ``c2`` are always derived from the channel scattering
    lengths ``a0`` and ``a2``.
    """

    mass: float
    a0: float
    a2: float
    n_exp: float
    density: float
    depletion0: float
    size_R: float
    equil_time_T: float
    hbar: float = HBAR
    n_exp_range: tuple[float, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("mass", "a0", "a2", "n_exp", "density", "size_R", "equil_time_T", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 <= self.depletion0 < 1.0:
            raise ValueError("depletion0 must lie in [0, 1)")

    @property
    def c0(self) -> float:
        return (self.a0 + 2.0 * self.a2) / 3.0

    @property
    def c2(self) -> float:
        return (self.a2 - self.a0) / 3.0

    def quantity(self, name: str) -> Quantity:
        kinds = {
            "mass": "mass", "a0": "length", "a2": "length", "c0": "length", "c2": "length",
            "n_exp": "dimensionless", "density": "density", "depletion0": "dimensionless",
            "size_R": "length", "equil_time_T": "time", "hbar": "action",
        }
        return Quantity.of(getattr(self, name), kinds[name])

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        out = {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
               if f.name != "n_exp_range"}
        out["c0"] = self.c0
        out["c2"] = self.c2
        return out


def preset_rb87() -> PhysicalParams:
    """Rb-87 spin-1 values (condensate population defaults to 1e5)."""
    return PhysicalParams(
        mass=1.42e-25,
        a0=58.2 * ANGSTROM,
        a2=56.6 * ANGSTROM,
        n_exp=1e5,
        density=1e20,
        depletion0=4e-3,
        size_R=1e-4,
        equil_time_T=0.6,
        n_exp_range=(3e4, 3e5),
    )


PRESETS = {"rb87": preset_rb87}


def load_params(path: str | Path, section: str = "params",
                base: PhysicalParams | None = None) -> PhysicalParams:
    """Override preset fields from an INI file; values are SI floats."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    if not cp.read(path):
        raise FileNotFoundError(path)
    if base is None:
        name = cp.get(section, "preset", fallback="rb87")
        base = PRESETS[name]()
    if not cp.has_section(section):
        return base
    known = {f.name for f in dataclasses.fields(PhysicalParams)} - {"n_exp_range"}
    changes = {}
    for key, raw in cp.items(section):
        if key == "preset":
            continue
        if key not in known:
            raise KeyError(f"unknown parameter {key!r} in [{section}]")
        changes[key] = float(raw)
    return base.replace(**changes)


def check_roundtrip(q: Quantity, u: UnitSystem) -> float:
    """Relative error of SI -> dimensionless -> SI for ``q``."""
    back = from_dimensionless(to_dimensionless(q, u), u, q.dims)
    return abs(back.value - q.value) / abs(q.value) if q.value else abs(back.value)


__all__ = [
    "HBAR", "ANGSTROM", "Quantity", "UnitSystem", "UnitMismatchError", "PhysicalParams",
    "preset_rb87", "PRESETS", "load_params", "to_dimensionless", "from_dimensionless",
    "check_roundtrip",
]
