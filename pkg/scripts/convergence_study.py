"""Time-step refinement for the Strang splitting: L2 error against a fine
reference and maximal relative energy drift, Hartree and contact runs.

    python3 scripts/convergence_study.py [--T 0.5]
"""
import argparse

import numpy as np

from spinorbec.grids import GridSpec, SpinorField, l2_norm
from spinorbec.meanfield import Contact, Convolution, SolverConfig, evolve
from spinorbec.potentials import SoftSphere


def study(name, phi0, kind, T, levels):
    run = lambda dt: evolve(phi0, kind, SolverConfig(dt, T, stride=1))  # noqa: E731
    ref = run(T / (levels[-1] * 16))[-1].phi
    prev = None
    print(f"{name}: n_steps  L2 error  ratio  energy drift")
    for n in levels:
        traj = run(T / n)
        err = l2_norm(SpinorField(ref.grid, traj[-1].phi.data - ref.data))
        e = np.array([s.energy.total for s in traj])
        drift = np.abs(e - e[0]).max() / abs(e[0])
        ratio = f"{prev / err:6.3f}" if prev else "     -"
        print(f"  {n:7d}  {err:.3e}  {ratio}  {drift:.2e}")
        prev = err


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=float, default=0.5)
    args = ap.parse_args()
    g = GridSpec.cube(1, 16.0, 64)
    phi0 = SpinorField.gaussian(g, 1.0, (1, 0.5j, 0.3)).normalize()
    levels = [20, 40, 80, 160, 320]
    conv = Convolution(SoftSphere(4.0, 1.0).sample(g), SoftSphere(-2.0, 1.0).sample(g))
    study("hartree", phi0, conv, args.T, levels)
    study("contact", phi0, Contact(4.0, -2.0), args.T, levels)


if __name__ == "__main__":
    main()
