import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinorbec.grids import GridSpec, ScalarField, SpinorField, grad_norm, l2_norm
from spinorbec.meanfield import (Contact, Convolution, NormDriftError, SolverConfig, Stepper,
                                 evolve, gp_energy, hartree_energy, magnetization_z, rhs,
                                 step_strang, write_trajectory_csv)
from spinorbec.potentials import SoftSphere, zero_kernel
from spinorbec.spin import bullet_pair


def soft_kernels(g, W0=2.0, V0=-1.0, R=1.0):
    return Convolution(SoftSphere(W0, R).sample(g), SoftSphere(V0, R).sample(g))


def constant_spinor(g, vec):
    vec = np.asarray(vec, dtype=complex)
    return SpinorField(g, np.einsum("s,...->s...", vec, np.ones(g.shape))).normalize()


def l2_dist(a, b):
    return l2_norm(SpinorField(a.grid, a.data - b.data))


# --- right-hand side -------------------------------------------------------------------


def test_rhs_contact_polarized_constant():
    g = GridSpec.cube(1, 4.0, 16)
    phi = constant_spinor(g, (1, 0, 0))
    kind = Contact(1.7, -0.3)
    rho = 1 / g.volume
    out = rhs(phi, kind)
    assert np.abs(out.data - (1.7 - 0.3) * rho * phi.data).max() < 1e-13


def test_rhs_free():
    g = GridSpec.cube(1, 8.0, 32)
    phi = SpinorField.gaussian(g, 1.0, (1, 2, 3))
    z = zero_kernel(g)
    from spinorbec.grids import laplacian
    assert np.abs(rhs(phi, Convolution(z, z)).data + laplacian(phi).data).max() < 1e-13


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_rhs_contact_componentwise(c):
    g = GridSpec.cube(1, 1.0, 4)
    vec = np.array(c[:3]) + 1j * np.array(c[3:])
    phi = SpinorField(g, np.einsum("s,...->s...", vec, np.ones(4)))
    out = rhs(phi, Contact(0.0, 1.0)).data[:, 0]
    u, v, w = vec
    # standard spin-1 terms with the spin-changing pieces u_bar v^2 and w_bar v^2
    exp_u = (abs(u) ** 2 + abs(v) ** 2 - abs(w) ** 2) * u + w.conjugate() * v * v
    exp_v = (abs(u) ** 2 + abs(w) ** 2) * v + 2 * u * w * v.conjugate()
    exp_w = (abs(w) ** 2 + abs(v) ** 2 - abs(u) ** 2) * w + u.conjugate() * v * v
    assert np.allclose(out, [exp_u, exp_v, exp_w], atol=1e-12)


# --- stepping --------------------------------------------------------------------------


def test_free_gaussian_dispersion():
    sigma, t = 1.0, 1.0
    g = GridSpec.cube(1, 80.0, 1024)
    phi = SpinorField.gaussian(g, sigma, (1, 0, 0))
    z = zero_kernel(g)
    traj = evolve(phi, Convolution(z, z), SolverConfig(0.01, t, stride=100))
    x = g.axes()[0]
    x2 = float((x**2 * traj[-1].phi.density()).sum() * g.cell_volume)
    s2 = sigma**2 * (1 + (2 * t / sigma**2) ** 2)
    assert x2 == pytest.approx(s2 / 2, rel=1e-3)


def test_constant_contact_plane_wave():
    g = GridSpec.cube(1, 4.0, 16)
    phi0 = constant_spinor(g, (1, 0, 0))
    kind = Contact(2.0, 0.5)
    mu = 2.5 / g.volume
    dt, n = 1e-3, 1000
    step = Stepper(kind, dt)
    phi = phi0
    for _ in range(n):
        phi = step(phi)
    assert np.abs(phi.data - np.exp(-1j * mu * n * dt) * phi0.data).max() < 1e-8


def test_second_order_convergence():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.5j, 0.3)).normalize()
    kind = soft_kernels(g, 4.0, -2.0)
    T = 0.5

    def run(dt):
        return evolve(phi0, kind, SolverConfig(dt, T, stride=10**6))[-1].phi

    ref = run(T / 2560)
    errs = [l2_dist(run(T / n), ref) for n in (20, 40, 80, 160)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    for r in ratios:
        assert r == pytest.approx(4.0, abs=0.5)


def test_norm_drift_long_run():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 1j, -0.5)).normalize()
    traj = evolve(phi0, soft_kernels(g), SolverConfig(1e-3, 10.0, stride=1000))
    assert len(traj) == 11
    assert max(abs(s.energy.norm - 1) for s in traj) <= 1e-10


def test_norm_drift_long_run_contact():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 1j, -0.5)).normalize()
    traj = evolve(phi0, Contact(3.0, -1.0), SolverConfig(1e-3, 10.0, stride=1000))
    assert max(abs(s.energy.norm - 1) for s in traj) <= 1e-10


def test_hartree_energy_drift():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.5, 0.2j)).normalize()
    traj = evolve(phi0, soft_kernels(g), SolverConfig(2.5e-3, 2.5, stride=100))
    e = np.array([s.energy.total for s in traj])
    assert np.abs(e - e[0]).max() / abs(e[0]) <= 1e-6


def test_energy_drift_scales_with_dt_squared():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 0.8, (1, 0.5, 0.2j)).normalize()
    kind = soft_kernels(g, 6.0, -3.0)

    def drift(dt):
        traj = evolve(phi0, kind, SolverConfig(dt, 0.5, stride=10))
        e = np.array([s.energy.total for s in traj])
        return np.abs(e - e[0]).max()

    d1, d2 = drift(0.01), drift(0.005)
    assert 2.5 < d1 / d2 < 6.0


def test_gp_energy_and_magnetization_conserved():
    g = GridSpec.cube(1, 16.0, 128)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.7, 0.4j)).normalize()
    traj = evolve(phi0, Contact(3.0, -1.0), SolverConfig(1e-3, 1.0, stride=100))
    m = np.array([s.energy.magnetization_z for s in traj])
    assert np.abs(m - m[0]).max() <= 1e-10
    e = np.array([s.energy.total for s in traj])
    assert np.abs(e - e[0]).max() / abs(e[0]) <= 1e-5


def test_energy_rate_at_start_vanishes():
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.3, 0.1)).normalize()
    kind = soft_kernels(g)
    e0 = hartree_energy(phi0, kind.W, kind.V).total
    rates = []
    for h in (0.02, 0.01):
        phi = step_strang(phi0, kind, h)
        rates.append(abs(hartree_energy(phi, kind.W, kind.V).total - e0) / h)
    assert rates[1] < rates[0] / 3
    assert rates[1] < 1e-4


def test_norm_drift_error():
    g = GridSpec.cube(1, 8.0, 32)
    phi0 = SpinorField.gaussian(g, 1.0).normalize()
    with pytest.raises(NormDriftError):
        evolve(phi0, Contact(1.0, 0.0), SolverConfig(1e-2, 0.05, norm_tol=-1.0))


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(0.0, 1.0)
    with pytest.raises(ValueError):
        SolverConfig(0.1, -1.0)
    with pytest.raises(ValueError):
        SolverConfig(0.1, 1.0, scheme="rk4")


# --- functionals -----------------------------------------------------------------------


def test_free_energy_is_gradient_squared():
    g = GridSpec.cube(1, 8.0, 32)
    phi = SpinorField.gaussian(g, 1.0, (1, 1, 0)).normalize()
    z = zero_kernel(g)
    e = hartree_energy(phi, z, z)
    assert e.total == pytest.approx(grad_norm(phi) ** 2, rel=1e-14)
    assert e.total == e.kinetic + e.density_interaction + e.spin_interaction


def test_gp_spin_term_polarized():
    g = GridSpec.cube(1, 8.0, 32)
    phi = SpinorField.gaussian(g, 1.0, (1, 0, 0)).normalize()
    e = gp_energy(phi, 0.3, -0.2)
    f4 = float((np.abs(phi.u) ** 4).sum() * g.cell_volume)
    assert e.spin_interaction == pytest.approx(4 * math.pi * -0.2 * f4, rel=1e-13)
    assert e.density_interaction == pytest.approx(4 * math.pi * 0.3 * f4, rel=1e-13)
    assert magnetization_z(phi) == pytest.approx(1.0)


def test_hartree_energy_dense_quadratic_form():
    g = GridSpec.cube(1, 5.0, 8)
    rng = np.random.default_rng(4)
    phi = SpinorField(g, rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))).normalize()
    W = SoftSphere(1.3, 1.2).sample(g)
    V = SoftSphere(-0.6, 1.2).sample(g)
    n = 8
    k2 = g.k_squared()
    F = np.fft.fft(np.eye(n), axis=0)
    lap = (np.fft.ifft(k2[:, None] * F, axis=0)).real
    T = np.kron(lap, np.eye(3))
    B = bullet_pair().matrix
    v = phi.to_vector()
    pair = 0.0
    vv = v.reshape(n, 3)
    for x in range(n):
        for y in range(n):
            d = (x - y + n // 2) % n
            a = np.kron(vv[x], vv[y])
            pair += (a.conj() @ ((W.data[d] * np.eye(9) + V.data[d] * B) @ a)).real
    e_ref = (v.conj() @ T @ v).real + 0.5 * pair
    assert hartree_energy(phi, W, V).total == pytest.approx(e_ref, rel=1e-10)


# --- convolution to contact ------------------------------------------------------------


def test_convolution_converges_to_contact():
    g = GridSpec.cube(1, 32.0, 512)
    phi0 = SpinorField.gaussian(g, 1.5, (1, 0.6, 0.3j)).normalize()
    g0, g2 = 4.0, -1.5
    cfg = SolverConfig(2e-3, 1.0, stride=10**6)
    target = evolve(phi0, Contact(g0, g2), cfg)[-1].phi
    dists = []
    for R in (1.0, 0.5, 0.25):
        # fix the sampled integral (the discrete Born length), not the continuum one
        box = SoftSphere(1.0, R).sample(g)
        mass = box.integral().real
        kind = Convolution(ScalarField(g, box.data * g0 / mass), ScalarField(g, box.data * g2 / mass))
        dists.append(l2_dist(evolve(phi0, kind, cfg)[-1].phi, target))
    assert dists[0] > dists[1] > dists[2]


def test_trajectory_csv(tmp_path):
    g = GridSpec.cube(1, 8.0, 32)
    phi0 = SpinorField.gaussian(g, 1.0).normalize()
    traj = evolve(phi0, Contact(1.0, 0.1), SolverConfig(0.01, 0.1, stride=5))
    write_trajectory_csv(traj, tmp_path / "t.csv")
    rows = (tmp_path / "t.csv").read_text().splitlines()
    assert rows[0] == "t,norm,E_kin,E_dens,E_spin,E_tot,M_z"
    assert len(rows) == 1 + len(traj) == 4
