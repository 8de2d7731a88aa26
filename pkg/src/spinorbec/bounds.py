"""Closed-form Gronwall bounds on alpha, in SI units.

All bounds have the form (alpha0 + 1/N) exp(rate * t * W0/hbar). The
variants differ in how the operator norms of the smeared potentials and
the gradient of the condensate wave function are estimated.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .potentials import SOBOLEV_CONSTANT, ball_volume
from .units import PhysicalParams

RATES = {"phys1": 10.0, "phys2": 66.0, "phys3": 14.0}
VARIANTS = ("mf_abstract", "phys1", "phys2", "phys3", "phys4")

# prefactors as printed next to the L^{3/2} and L^3 norms, and the xi coefficients
PRINTED_C32 = 0.37
PRINTED_C3 = 3.24
XI_A = 1.38
XI_B = 6.22
XI_S = 3.9  # 3 W0/hbar in 1/s for W0/hbar = 1.3


class BoundDomainError(ValueError):
    pass


class ExperimentCSVError(ValueError):
    pass


@dataclass(frozen=True)
class BoundInputs:
    alpha0: float = 4e-3
    n_exp: float = 1e5
    W0_over_hbar: float = 1.3
    sigma: float = 1e-4
    R: float = 1e-4
    T_max: float = 0.1
    variant: str = "phys1"
    mass: float = 1.42e-25
    hbar: float = 1.054571817e-34
    C: float = 0.0  # 1/s, only for mf_abstract

    def __post_init__(self):
        if not 0 <= self.alpha0 < 1:
            raise ValueError("alpha0 must lie in [0, 1)")
        if self.n_exp < 2:
            raise ValueError("n_exp must be >= 2")
        if self.W0_over_hbar <= 0 or self.sigma <= 0 or self.R <= 0 or self.T_max <= 0:
            raise ValueError("rates and lengths must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.C < 0:
            raise ValueError("C must be >= 0")

    @classmethod
    def from_params(cls, p: PhysicalParams, W0_over_hbar: float, **kw) -> "BoundInputs":
        return cls(alpha0=p.depletion0, n_exp=p.n_exp, W0_over_hbar=W0_over_hbar,
                   sigma=kw.pop("sigma", p.size_R), R=kw.pop("R", p.size_R),
                   T_max=kw.pop("T_max", 0.1), mass=p.mass, hbar=p.hbar, **kw)

    def with_variant(self, variant: str) -> "BoundInputs":
        return replace(self, variant=variant)

    @property
    def prefactor(self) -> float:
        return self.alpha0 + 1.0 / self.n_exp


@dataclass
class BoundCurve:
    times: np.ndarray
    values: np.ndarray
    label: str = ""

    def is_nondecreasing(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_sec", "bound"])
            for t, v in zip(self.times, self.values):
                w.writerow([f"{t:.10g}", f"{v:.15e}"])


def abstract_bound(K: float, N: float, C: float, t) -> np.ndarray | float:
    """(K + 1)/N e^{Ct}."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if C < 0:
        raise ValueError("C must be >= 0")
    out = (K + 1) / N * np.exp(C * np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def trace_bound(K: float, N: float, C: float, t):
    """Trace-norm companion 2 sqrt((K+1)/N) e^{Ct/2}, from Tr|.| <= 2 sqrt(alpha)."""
    return 2 * np.sqrt(abstract_bound(K, N, C, t))


def xi(T: float, reading: str = "as_valued") -> float:
    """Rate coefficient of the T-dependent bound.

    ``as_printed`` keeps the displayed exponent +1 on the second factor;
    ``as_valued`` uses -1, which is what reproduces xi(0.1 s) ~ 14.
    """
    s = 1.0 - XI_S * T
    if s <= 0:
        raise BoundDomainError(f"1 - 3.9 T = {s:.3g} <= 0: the Duhamel gradient bound breaks down")
    if reading == "as_printed":
        return XI_A * s**-2 + XI_B * s
    if reading == "as_valued":
        return XI_A * s**-2 + XI_B / s
    raise ValueError(f"unknown reading {reading!r}")


def _check_duhamel(inp: BoundInputs, T: float) -> float:
    s = 1.0 - 3.0 * inp.W0_over_hbar * T
    if s <= 0:
        raise BoundDomainError(f"1 - 3 (W0/hbar) T = {s:.3g} <= 0 for T = {T}")
    return s


def rate(inp: BoundInputs, reading: str = "as_valued") -> float:
    """Coefficient of t W0/hbar in the exponent (for mf_abstract: C / (W0/hbar))."""
    v = inp.variant
    if v == "mf_abstract":
        return inp.C / inp.W0_over_hbar
    if v in RATES:
        if v == "phys3":
            _check_duhamel(inp, inp.T_max)
        return RATES[v]
    return xi(inp.T_max, reading)


def phys_bound(inp: BoundInputs, t, reading: str = "as_valued"):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    if inp.variant in ("phys3", "phys4") and np.any(t_arr > inp.T_max * (1 + 1e-12)):
        raise BoundDomainError(f"{inp.variant} holds only for t <= T_max = {inp.T_max}")
    out = inp.prefactor * np.exp(rate(inp, reading) * t_arr * inp.W0_over_hbar)
    return float(out) if out.ndim == 0 else out


def bound_curve(inp: BoundInputs, times, reading: str = "as_valued") -> BoundCurve:
    times = np.asarray(times, dtype=float)
    return BoundCurve(times, np.asarray(phys_bound(inp, times, reading)), inp.variant)


@dataclass
class GradBounds:
    gaussian_init: float
    energy_uniform: float
    duhamel: float
    energy_term: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def grad_bounds(inp: BoundInputs, T: float | None = None) -> GradBounds:
    """Three estimates of ||grad phi_t|| in 1/m."""
    T = inp.T_max if T is None else T
    g0 = math.sqrt(1.5) / inp.sigma
    energy_term = math.sqrt(2 * inp.mass * inp.W0_over_hbar / inp.hbar)
    s = _check_duhamel(inp, T)
    return GradBounds(g0, math.sqrt(g0**2 + energy_term**2), g0 / s, energy_term)


def norm_factors(R: float) -> tuple[float, float]:
    """||W||_{3/2}/W0 (m^2) and ||W||_3/W0 (m) for a 3D soft sphere of radius R."""
    v = ball_volume(R, 3)
    return v ** (2.0 / 3.0), v ** (1.0 / 3.0)


def recomputed_constants() -> dict:
    """The two printed prefactors rebuilt from the Sobolev constant 0.18."""
    return {
        "c32_printed": PRINTED_C32, "c32_recomputed": 2 * SOBOLEV_CONSTANT,
        "c3_printed": PRINTED_C3, "c3_recomputed": (4 * math.sqrt(2) + 2) * math.sqrt(SOBOLEV_CONSTANT),
        "young_rate": 2 + (4 * math.sqrt(2) + 2),
    }


def recomputed_rates(inp: BoundInputs, constants: str = "printed") -> dict:
    """Rates behind phys1..phys3 and the xi coefficients, rebuilt from the inputs."""
    rc = recomputed_constants()
    c32, c3 = ((rc["c32_printed"], rc["c3_printed"]) if constants == "printed"
               else (rc["c32_recomputed"], rc["c3_recomputed"]))
    n32, n3 = norm_factors(inp.R)
    gb = grad_bounds(inp)

    def sob(g):
        return c32 * n32 * g**2 + c3 * n3 * g

    return {
        "phys1": rc["young_rate"],
        "phys2": sob(gb.energy_uniform),
        "phys3": sob(gb.duhamel),
        "xi_a": c32 * n32 * gb.gaussian_init**2,
        "xi_b": c3 * n3 * gb.gaussian_init,
        "xi_s": 3 * inp.W0_over_hbar,
    }


def xi_from_inputs(inp: BoundInputs, T: float, constants: str = "printed") -> float:
    """xi(T) with coefficients recomputed from the inputs (reading with exponent -1)."""
    r = recomputed_rates(inp, constants)
    s = 1 - r["xi_s"] * T
    if s <= 0:
        raise BoundDomainError("Duhamel gradient bound breaks down")
    return r["xi_a"] / s**2 + r["xi_b"] / s


def xi_report(T: float = 0.1) -> dict:
    a = xi(T, "as_printed")
    b = xi(T, "as_valued")
    return {"T": T, "as_printed": a, "as_valued": b, "discrepancy": b - a}


# --- comparison with the experimental time series ------------------------------


@dataclass
class ExperimentSeries:
    times: np.ndarray
    n_condensed: np.ndarray
    n_tot: float

    @property
    def alpha(self) -> np.ndarray:
        return 1.0 - self.n_condensed / self.n_tot


def load_experiment_csv(path: str | Path, n_tot: float) -> ExperimentSeries:
    """Read ``t_sec,n_condensed`` rows; lines starting with '#' are comments."""
    rows = []
    header = None
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = [p.strip() for p in s.split(",")]
            if header is None:
                header = parts
                if header != ["t_sec", "n_condensed"]:
                    raise ExperimentCSVError(f"{path}: expected header 't_sec,n_condensed', got {s!r}")
                continue
            if len(parts) != 2:
                raise ExperimentCSVError(f"{path}:{lineno}: expected 2 columns")
            try:
                t, n = float(parts[0]), float(parts[1])
            except ValueError as e:
                raise ExperimentCSVError(f"{path}:{lineno}: {e}") from None
            if t < 0 or n < 0 or n > n_tot:
                raise ExperimentCSVError(f"{path}:{lineno}: values out of range")
            rows.append((t, n))
    if header is None or not rows:
        raise ExperimentCSVError(f"{path}: no data")
    a = np.array(rows)
    return ExperimentSeries(a[:, 0], a[:, 1], n_tot)


def sample_experiment_path() -> Path:
    return Path(__file__).parent / "data" / "fig1_sample_digitized.csv"


@dataclass
class Figure1:
    alpha0: float
    theory: BoundCurve
    inputs: BoundInputs
    experiment: ExperimentSeries | None = None

    def theory_at(self, t):
        return phys_bound(self.inputs, t)

    def margin(self) -> np.ndarray:
        """theory - experiment at the experimental times (positive: theory above)."""
        if self.experiment is None:
            return np.array([])
        return np.asarray(self.theory_at(self.experiment.times)) - self.experiment.alpha


def figure1_curves(n_tot: float = 1.9e4, n_init: float = 9.5e3, W0_over_hbar: float = 0.247,
                   t_grid=None, experiment_csv: str | Path | None = None) -> Figure1:
    if n_init > n_tot:
        raise ValueError("n_init must not exceed n_tot")
    t_grid = np.linspace(0, 0.08, 81) if t_grid is None else np.asarray(t_grid, dtype=float)
    alpha0 = 1.0 - n_init / n_tot
    inp = BoundInputs(alpha0=alpha0, n_exp=n_tot, W0_over_hbar=W0_over_hbar, variant="phys1")
    exp = load_experiment_csv(experiment_csv, n_tot) if experiment_csv is not None else None
    return Figure1(alpha0, bound_curve(inp, t_grid), inp, exp)


def summary(inp: BoundInputs, reading: str = "as_valued") -> dict:
    out = {
        "variant": inp.variant, "alpha0": inp.alpha0, "n_exp": inp.n_exp,
        "W0_over_hbar": inp.W0_over_hbar, "W0_J": inp.W0_over_hbar * inp.hbar,
        "prefactor": inp.prefactor, "rate": rate(inp, reading), "reading": reading,
        "duhamel_T_limit": 1.0 / (3.0 * inp.W0_over_hbar), "xi_T_limit": 1.0 / XI_S,
    }
    if XI_S * inp.T_max < 1 and 3 * inp.W0_over_hbar * inp.T_max < 1:
        out.update({f"xi_{k}": v for k, v in xi_report(inp.T_max).items() if k != "T"})
    return out
