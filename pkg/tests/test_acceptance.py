"""One test per acceptance criterion; each prints a single PASS/FAIL line.

The lines are repeated in the terminal summary. Criteria 6, 8 and 9 are
slow (several minutes each on one core).
"""
import math
import time

import numpy as np
import pytest

from spinorbec.bounds import (BoundInputs, figure1_curves, grad_bounds, phys_bound,
                              sample_experiment_path, xi)
from spinorbec.cli import run
from spinorbec.grids import GridSpec, ScalarField, SpinorField, l2_norm
from spinorbec.identities import IdentityConfig, run_identity_suite
from spinorbec.meanfield import (Contact, Convolution, SolverConfig, evolve,
                                 write_trajectory_csv)
from spinorbec.potentials import SoftSphere, born_w0, scattering_length_exact, zero_kernel
from spinorbec.spin import bullet_pair, spin_matrices
from spinorbec.units import ANGSTROM, HBAR, preset_rb87

LINES = []


def report(n, checks, elapsed, limit):
    """checks: list of (label, ok, detail)."""
    ok = all(c[1] for c in checks) and elapsed <= limit
    parts = [f"{label}: {'ok' if good else 'FAIL'} ({detail})" for label, good, detail in checks]
    parts.append(f"time {elapsed:.1f}s <= {limit:g}s: {'ok' if elapsed <= limit else 'FAIL'}")
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} | " + "; ".join(parts)
    LINES.append(line)
    print(line)
    return ok


def close(x, target, rel):
    return abs(x - target) <= rel * abs(target)


# 1 -------------------------------------------------------------------------------------


def test_criterion_1_table_derivations():
    t0 = time.perf_counter()
    p = preset_rb87()
    c0, c2 = p.c0 / ANGSTROM, p.c2 / ANGSTROM
    checks = [("c0 = 57.1 A", float(f"{c0:.3g}") == 57.1, f"{c0:.4f}"),
              ("c2 = -0.53 A", float(f"{c2:.2g}") == -0.53, f"{c2:.4f}")]
    assert report(1, checks, time.perf_counter() - t0, 1.0)


# 2 -------------------------------------------------------------------------------------


def test_criterion_2_born_fit():
    t0 = time.perf_counter()
    p = preset_rb87()
    W0 = born_w0(p.c0, p.size_R, p.mass, p.n_exp)
    a = scattering_length_exact(SoftSphere(W0, p.size_R), p.mass, p.n_exp)
    checks = [("W0 = 1.34e-34 J +-1%", close(W0, 1.34e-34, 0.01), f"{W0:.4e}"),
              ("W0/hbar = 1.3 +-5%", close(W0 / HBAR, 1.3, 0.05), f"{W0 / HBAR:.4f}"),
              ("exact c0 within 5%", close(a, p.c0, 0.05), f"{a / ANGSTROM:.3f} A")]
    assert report(2, checks, time.perf_counter() - t0, 1.0)


# 3 -------------------------------------------------------------------------------------


def test_criterion_3_physical_bound():
    t0 = time.perf_counter()
    inp = BoundInputs(alpha0=4e-3, n_exp=1e5, W0_over_hbar=1.3, sigma=1e-4, R=1e-4, T_max=0.1)
    b = phys_bound(inp, 0.1)
    gb = grad_bounds(inp)
    xp, xv = xi(0.1, "as_printed"), xi(0.1, "as_valued")
    checks = [("0.014 <= phys1(0.1) <= 0.015", 0.014 <= b <= 0.015, f"{b:.6f}"),
              ("grad init 1.2e4 +-2%", close(gb.gaussian_init, 1.2e4, 0.02), f"{gb.gaussian_init:.1f}"),
              ("grad energy 6e4 +-2%", close(gb.energy_uniform, 6e4, 0.02), f"{gb.energy_uniform:.1f}"),
              ("grad duhamel 1.97e4 +-2%", close(gb.duhamel, 1.97e4, 0.02), f"{gb.duhamel:.1f}"),
              ("xi printed 7.50 +-0.01", abs(xp - 7.50) <= 0.01, f"{xp:.4f}"),
              ("xi valued 13.9 +-0.1", abs(xv - 13.9) <= 0.1, f"{xv:.4f}")]
    assert report(3, checks, time.perf_counter() - t0, 1.0)


# 4 -------------------------------------------------------------------------------------


def test_criterion_4_fig1():
    t0 = time.perf_counter()
    fig = figure1_curves(1.9e4, 9.5e3, 0.247, [0.0, 0.04, 0.08], sample_experiment_path())
    checks = [("alpha0 = 0.50", abs(fig.alpha0 - 0.5) < 1e-15, f"{fig.alpha0}")]
    for t, v in zip(fig.theory.times, fig.theory.values):
        hand = (0.5 + 1 / 1.9e4) * math.exp(10 * t * 0.247)
        checks.append((f"curve({t * 1e3:.0f} ms)", abs(v - hand) / hand <= 1e-10, f"{v:.10f}"))
    m = fig.margin()
    checks.append(("above every sample point", bool(np.all(m > 0)), f"min margin {m.min():.3e}"))
    assert report(4, checks, time.perf_counter() - t0, 1.0)


# 5 -------------------------------------------------------------------------------------


def test_criterion_5_spin_algebra():
    t0 = time.perf_counter()
    s1, s2, s3 = spin_matrices()
    c = lambda a, b: a @ b - b @ a  # noqa: E731
    comm_err = max(np.abs(c(s1, s2) - 1j * s3).max(), np.abs(c(s2, s3) - 1j * s1).max(),
                   np.abs(c(s3, s1) - 1j * s2).max())
    cas = np.abs(s1 @ s1 + s2 @ s2 + s3 @ s3 - 2 * np.eye(3)).max()
    ev = np.linalg.eigvalsh(bullet_pair().matrix)
    spec_err = np.abs(ev - np.array([-2, -1, -1, -1, 1, 1, 1, 1, 1])).max()
    checks = [("commutators", comm_err <= 1e-12, f"{comm_err:.1e}"),
              ("Casimir = 2I", cas <= 1e-12, f"{cas:.1e}"),
              ("bullet spectrum", spec_err <= 1e-12, f"{spec_err:.1e}")]
    assert report(5, checks, time.perf_counter() - t0, 1.0)


# 6 -------------------------------------------------------------------------------------

IDENT_CFG = IdentityConfig(N=3, points=4, n_seeds=50, seed=0)


@pytest.fixture(scope="module")
def identity_run():
    t0 = time.perf_counter()
    rep = run_identity_suite(IDENT_CFG)
    return rep, time.perf_counter() - t0


@pytest.mark.slow
def test_criterion_6_identity_suite(identity_run):
    rep, elapsed = identity_run
    checks = [(name, c.passed, f"worst {c.value:.1e} tol {c.tol:.0e}") for name, c in rep.checks.items()]
    assert report(6, checks, elapsed, 300.0)


# 7 -------------------------------------------------------------------------------------


def _dist(a, b):
    return l2_norm(SpinorField(a.grid, a.data - b.data))


def mean_field_suite():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.5j, 0.3)).normalize()
    conv = Convolution(SoftSphere(2.0, 1.0).sample(g), SoftSphere(-1.0, 1.0).sample(g))
    trajs = {}

    long = evolve(phi0, conv, SolverConfig(1e-3, 10.0, stride=1000))
    trajs["norm_run"] = long
    drift_n = max(abs(s.energy.norm - 1) for s in long)

    h = evolve(phi0, conv, SolverConfig(2.5e-3, 2.5, stride=100))
    eh = np.array([s.energy.total for s in h])
    drift_h = np.abs(eh - eh[0]).max() / abs(eh[0])
    gp = evolve(phi0, Contact(3.0, -1.0), SolverConfig(1e-3, 1.0, stride=100))
    eg = np.array([s.energy.total for s in gp])
    drift_g = np.abs(eg - eg[0]).max() / abs(eg[0])
    trajs["hartree"], trajs["gp"] = h, gp

    strong = Convolution(SoftSphere(4.0, 1.0).sample(g), SoftSphere(-2.0, 1.0).sample(g))
    T = 0.5
    end = lambda dt: evolve(phi0, strong, SolverConfig(dt, T, stride=10**6))[-1].phi  # noqa: E731
    ref = end(T / 2560)
    errs = [_dist(end(T / n), ref) for n in (20, 40, 80, 160)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]

    gf = GridSpec.cube(1, 80.0, 1024)
    z = zero_kernel(gf)
    free = evolve(SpinorField.gaussian(gf, 1.0, (1, 0, 0)), Convolution(z, z), SolverConfig(0.01, 1.0, stride=100))
    x = gf.axes()[0]
    x2 = float((x**2 * free[-1].phi.density()).sum() * gf.cell_volume)
    disp_err = abs(x2 - 0.5 * (1 + 4.0)) / (0.5 * 5.0)

    gc = GridSpec.cube(1, 32.0, 512)
    p0 = SpinorField.gaussian(gc, 1.5, (1, 0.6, 0.3j)).normalize()
    cfg = SolverConfig(2e-3, 1.0, stride=10**6)
    target = evolve(p0, Contact(4.0, -1.5), cfg)[-1].phi
    dists = []
    for R in (1.0, 0.5, 0.25):
        box = SoftSphere(1.0, R).sample(gc)
        mass = box.integral().real
        kind = Convolution(ScalarField(gc, box.data * 4.0 / mass), ScalarField(gc, box.data * -1.5 / mass))
        dists.append(_dist(evolve(p0, kind, cfg)[-1].phi, target))

    checks = [("norm drift 1e4 steps <= 1e-10", drift_n <= 1e-10, f"{drift_n:.1e}"),
              ("Hartree energy drift <= 1e-6", drift_h <= 1e-6, f"{drift_h:.1e}"),
              ("GP energy drift <= 1e-6", drift_g <= 1e-6, f"{drift_g:.1e}"),
              ("dt ratios 4 +-0.5", all(abs(r - 4) <= 0.5 for r in ratios),
               ", ".join(f"{r:.3f}" for r in ratios)),
              ("free Gaussian within 0.1%", disp_err <= 1e-3, f"{disp_err:.1e}"),
              ("contact limit monotone", dists[0] > dists[1] > dists[2],
               ", ".join(f"{d:.3e}" for d in dists))]
    return checks, trajs


@pytest.fixture(scope="module")
def mf_run():
    t0 = time.perf_counter()
    checks, trajs = mean_field_suite()
    return checks, trajs, time.perf_counter() - t0


def test_criterion_7_mean_field(mf_run):
    checks, _, elapsed = mf_run
    assert report(7, checks, elapsed, 600.0)


# 8 -------------------------------------------------------------------------------------


def _oracle(out):
    t0 = time.perf_counter()
    code = run(["oracle", "--N", "2,3,4", "--out", str(out)])
    return code, time.perf_counter() - t0


def _load(out, N):
    return np.loadtxt(out / f"oracle_N{N}.csv", delimiter=",", skiprows=1)


@pytest.fixture(scope="module")
def oracle_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("oracle_a")
    code, elapsed = _oracle(out)
    return out, code, elapsed


@pytest.mark.slow
def test_criterion_8_theorem_oracle(oracle_run):
    out, code, elapsed = oracle_run
    data = {N: _load(out, N) for N in (2, 3, 4)}
    viol = 0.0
    for d in data.values():
        a, td = d[:, 1], d[:, 2]
        viol = max(viol, (a - td).max(), (td - 2 * np.sqrt(np.clip(a, 0, None))).max())
    sup = {N: d[:, 1].max() for N, d in data.items()}
    ratio = sup[2] / sup[4]
    dominated = all(np.all(d[:, 1] <= d[:, 3]) for d in data.values())
    man = (out / "manifest.txt").read_text()
    C = [ln.split("=")[1].strip() for ln in man.splitlines() if ln.startswith("C_common")][0]
    t4 = [float(ln.split("=")[1]) for ln in man.splitlines() if ln.startswith("N4 =")][0]
    checks = [("exit code 0", code == 0, str(code)),
              ("sandwich within 1e-10", viol <= 1e-10, f"max violation {viol:.1e}"),
              ("sup alpha decreasing in N", sup[2] > sup[3] > sup[4],
               ", ".join(f"N={N}: {v:.5f}" for N, v in sup.items())),
              ("alpha2/alpha4 in [1.4, 2.8]", 1.4 <= ratio <= 2.8, f"{ratio:.3f}"),
              ("one C dominates all N", dominated, f"C = {C}"),
              ("N=4 run <= 30 min", t4 <= 1800, f"{t4:.0f}s")]
    assert report(8, checks, elapsed, 3600.0)


# 9 -------------------------------------------------------------------------------------


@pytest.mark.slow
def test_criterion_9_determinism(identity_run, mf_run, oracle_run, tmp_path):
    t0 = time.perf_counter()
    rep, _ = identity_run
    same6 = run_identity_suite(IDENT_CFG).text() == rep.text()

    _, trajs, _ = mf_run
    _, trajs2 = mean_field_suite()
    same7 = True
    for key in trajs:
        write_trajectory_csv(trajs[key], tmp_path / f"{key}_a.csv")
        write_trajectory_csv(trajs2[key], tmp_path / f"{key}_b.csv")
        same7 &= (tmp_path / f"{key}_a.csv").read_bytes() == (tmp_path / f"{key}_b.csv").read_bytes()

    out, _, _ = oracle_run
    out2 = tmp_path / "oracle_b"
    _oracle(out2)
    same8 = all((out / f"oracle_N{N}.csv").read_bytes() == (out2 / f"oracle_N{N}.csv").read_bytes()
                for N in (2, 3, 4))
    checks = [("identity report identical", same6, "50 seeds"),
              ("mean-field CSVs identical", same7, ", ".join(trajs)),
              ("oracle CSVs identical", same8, "N = 2, 3, 4")]
    assert report(9, checks, time.perf_counter() - t0, 3600.0)
