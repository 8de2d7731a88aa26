"""Command-line entry point: ``spinorbec {solve,oracle,bounds,identities,presets}``.

Exit codes: 0 success, 1 invalid input or failed checks, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__
from .bounds import (VARIANTS, BoundDomainError, BoundInputs, ExperimentCSVError, bound_curve,
                     figure1_curves, grad_bounds, recomputed_constants, sample_experiment_path,
                     summary)
from .config import ConfigError, build, dataclass_section, kernel_section, read_ini, to_ini
from .grids import GridSpec, SpinorField, save_field_csv
from .identities import IdentityConfig, run_identity_suite
from .manybody import DimensionCapError, KrylovConvergenceError
from .meanfield import (Contact, Convolution, NormDriftError, SolverConfig, evolve,
                        write_trajectory_csv)
from .potentials import SoftSphere, physical_kernels, scattering_length_exact
from .theorem import TheoremConfig, fit_rate, run_theorem_experiment
from .units import ANGSTROM, PRESETS


class ValidationError(ValueError):
    pass


@dataclass
class SolveScenario:
    dim: int = 1
    points: int = 128
    extent: float = 32.0
    kind: str = "convolution"
    W0: float = 2.0
    R: float = 1.0
    V0: float = -1.0
    RV: float = 1.0
    g0: float = 1.0
    g2: float = -0.1
    sigma: float = 1.5
    weights: tuple = (1.0, 1.0, 1.0)
    dt: float = 2.5e-3
    t_end: float = 1.0
    stride: int = 40
    norm_tol: float = 1e-6


# --- helpers -----------------------------------------------------------------------


def _versions() -> dict:
    return {"spinorbec": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_manifest(out: Path | None, command: str, config: dict, results: dict, timings: dict,
                   status: str) -> None:
    if out is None:
        return
    sections = {"run": {"command": command, "status": status}, "versions": _versions()}
    for name, sec in config.items():
        sections[f"config.{name}"] = sec
    sections["results"] = results
    sections["timings"] = {k: f"{v:.3f}" for k, v in timings.items()}
    (out / "manifest.txt").write_text(to_ini(sections))


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_times(text: str) -> np.ndarray:
    """'0.1' or 'start:stop:num' or 'a,b,c'."""
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    return np.array([float(x) for x in text.split(",")])


def _print_block(title: str, d: dict) -> None:
    print(f"[{title}]")
    for k, v in d.items():
        print(f"{k} = {v:.6g}" if isinstance(v, float) else f"{k} = {v}")


# --- subcommands -------------------------------------------------------------------


def cmd_solve(args) -> int:
    ini = read_ini(args.config)
    flags = {k: getattr(args, k) for k in ("dim", "points", "extent", "kind", "dt", "t_end", "sigma")}
    sc = build(SolveScenario, ini.get("solve"), flags)
    grid = GridSpec.cube(sc.dim, sc.extent, sc.points)
    phi = SpinorField.gaussian(grid, sc.sigma, sc.weights).normalize()
    if sc.kind == "convolution":
        kind = Convolution(SoftSphere(sc.W0, sc.R).sample(grid), SoftSphere(sc.V0, sc.RV).sample(grid))
    elif sc.kind == "contact":
        kind = Contact(sc.g0, sc.g2)
    else:
        raise ValidationError(f"unknown kind {sc.kind!r}")
    cfg = SolverConfig(sc.dt, sc.t_end, stride=sc.stride, norm_tol=sc.norm_tol)
    t0 = time.perf_counter()
    traj = evolve(phi, kind, cfg)
    elapsed = time.perf_counter() - t0
    e0, e1 = traj[0].energy, traj[-1].energy
    res = {"steps": cfg.n_steps, "energy_start": e0.total, "energy_end": e1.total,
           "energy_rel_drift": abs(e1.total - e0.total) / abs(e0.total),
           "norm_drift": abs(e1.norm - e0.norm)}
    _print_block("solve", res)
    out = _outdir(args)
    if out:
        write_trajectory_csv(traj, out / "trajectory.csv")
        save_field_csv(traj[-1].phi, out / "final_field.csv")
    write_manifest(out, "solve", {"solve": dataclass_section(sc)}, res, {"evolve": elapsed}, "ok")
    return 0


def cmd_oracle(args) -> int:
    ini = read_ini(args.config)
    Ns = [int(x) for x in str(args.N).split(",")] if args.N else \
        [int(x) for x in ini.get("run", {}).get("N", "2,3,4").split(",")]
    flags = {"points": args.points, "extent": args.extent, "T": args.T, "n_snapshots": args.snapshots,
             "K": args.K, "tol": args.tol, "seed": args.seed}
    sec = dict(ini.get("oracle", {}))
    base = TheoremConfig()
    Wk = kernel_section(ini.get("W"), base.W)
    Vk = kernel_section(ini.get("V"), base.V)
    reports = []
    timings = {}
    for N in Ns:
        cfg = build(TheoremConfig, sec, dict(flags, N=N), W=Wk, V=Vk)
        prog = (lambda t, a, N=N: print(f"  N={N} t={t:.4g} alpha={a:.6e}", flush=True)) if args.verbose else None
        rep = run_theorem_experiment(cfg, prog)
        timings[f"N{N}"] = rep.elapsed
        reports.append(rep)
    C = fit_rate(reports)
    res = {"C_common": C}
    for r in reports:
        res[f"N{r.N}_sup_alpha"] = r.sup_alpha
        res[f"N{r.N}_C"] = r.C
        res[f"N{r.N}_sandwich_violation"] = r.sandwich_violation()
        res[f"N{r.N}_energy_drift"] = float(np.ptp(r.energy))
        res[f"N{r.N}_norm_drift"] = float(np.abs(r.norm - 1).max())
    sup = {r.N: r.sup_alpha for r in reports}
    if 2 in sup and 4 in sup:
        res["ratio_alpha2_alpha4"] = sup[2] / sup[4]
    ok = all(r.sandwich_violation() <= 1e-10 for r in reports)
    res["sandwich_ok"] = ok
    _print_block("oracle", res)
    out = _outdir(args)
    if out:
        for r in reports:
            r.write_csv(out / f"oracle_N{r.N}.csv", C)
    cfg_echo = {"oracle": dataclass_section(reports[0].config, skip=("N",)), "W": Wk, "V": Vk,
                "run": {"N": ",".join(map(str, Ns))}}
    write_manifest(out, "oracle", cfg_echo, res, timings, "ok" if ok else "fail")
    return 0 if ok else 1


def _bound_inputs(args, ini) -> BoundInputs:
    sec = dict(ini.get("bounds", {}))
    preset = args.preset or sec.pop("preset", "rb87")
    if preset not in PRESETS:
        raise ValidationError(f"unknown preset {preset!r}")
    p = PRESETS[preset]()
    W, _ = physical_kernels(p)
    w0h = W.W0 / p.hbar
    base = BoundInputs.from_params(p, w0h)
    fields = {k: sec.pop(k) for k in list(sec) if k in BoundInputs.__dataclass_fields__}
    flags = {"alpha0": args.alpha0, "n_exp": args.n_exp, "W0_over_hbar": args.W0_over_hbar,
             "T_max": args.T_max, "variant": args.variant, "sigma": args.sigma, "R": args.R}
    merged = {k: getattr(base, k) for k in BoundInputs.__dataclass_fields__}
    merged.update({k: float(v) if k != "variant" else v for k, v in fields.items()})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return BoundInputs(**merged)


def cmd_bounds(args) -> int:
    ini = read_ini(args.config)
    out = _outdir(args)
    t0 = time.perf_counter()
    if args.fig1:
        times = _parse_times(args.t_grid or "0:0.08:81")
        csv_path = args.experiment_csv or sample_experiment_path()
        fig = figure1_curves(args.n_tot, args.n_init, args.W0_over_hbar or 0.247, times, csv_path)
        res = {"alpha0": fig.alpha0, "n_tot": args.n_tot, "W0_over_hbar": fig.inputs.W0_over_hbar,
               "theory_t0": float(fig.theory.values[0]), "theory_end": float(fig.theory.values[-1]),
               "min_margin_over_experiment": float(fig.margin().min()),
               "theory_above_experiment": bool(np.all(fig.margin() > 0))}
        _print_block("figure1", res)
        if out:
            fig.theory.write_csv(out / "fig1_theory.csv")
        write_manifest(out, "bounds --fig1", {"fig1": {"n_tot": args.n_tot, "n_init": args.n_init,
                                                         "experiment_csv": str(csv_path)}},
                       res, {"total": time.perf_counter() - t0}, "ok")
        return 0
    inp = _bound_inputs(args, ini)
    reading = args.reading
    times = _parse_times(args.t_grid) if args.t_grid else _parse_times(str(args.t))
    curve = bound_curve(inp, times, reading)
    for t, v in zip(curve.times, curve.values):
        print(f"t = {t:.6g} s  bound = {v:.6g}")
    res = summary(inp, reading)
    if 3 * inp.W0_over_hbar * inp.T_max < 1:
        res.update({f"grad_{k}": v for k, v in grad_bounds(inp).as_dict().items()})
    res.update({f"const_{k}": v for k, v in recomputed_constants().items()})
    _print_block("summary", res)
    if out:
        curve.write_csv(out / f"bound_{inp.variant}.csv")
    write_manifest(out, "bounds", {"bounds": {k: getattr(inp, k) for k in BoundInputs.__dataclass_fields__}},
                   res, {"total": time.perf_counter() - t0}, "ok")
    return 0


def cmd_identities(args) -> int:
    ini = read_ini(args.config)
    flags = {"N": args.N, "points": args.grid, "extent": args.extent, "n_seeds": args.n_seeds,
             "seed": args.seed}
    cfg = build(IdentityConfig, ini.get("identities"), flags)
    rep = run_identity_suite(cfg)
    text = rep.text()
    sys.stdout.write(text)
    out = _outdir(args)
    if out:
        (out / "identities_report.txt").write_text(text)
    res = {name: ("PASS" if c.passed else "FAIL") for name, c in rep.checks.items()}
    res["overall"] = "PASS" if rep.passed else "FAIL"
    write_manifest(out, "identities", {"identities": dataclass_section(cfg)}, res,
                   {"total": rep.elapsed}, "ok" if rep.passed else "fail")
    return 0 if rep.passed else 1


def cmd_presets(args) -> int:
    names = [args.name] if args.name else sorted(PRESETS)
    for name in names:
        if name not in PRESETS:
            raise ValidationError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        p = PRESETS[name]()
        W, V = physical_kernels(p)
        a_exact = scattering_length_exact(W, p.mass, p.n_exp, p.hbar)
        d = {
            "mass_kg": p.mass, "a0_angstrom": p.a0 / ANGSTROM, "a2_angstrom": p.a2 / ANGSTROM,
            "c0_angstrom": p.c0 / ANGSTROM, "c2_angstrom": p.c2 / ANGSTROM,
            "n_exp": p.n_exp, "density_m3": p.density, "depletion0": p.depletion0,
            "size_R_m": p.size_R, "equil_time_T_s": p.equil_time_T,
            "W0_born_J": W.W0, "W0_over_hbar_per_s": W.W0 / p.hbar,
            "V0_born_J": V.W0, "c0_exact_from_W0_angstrom": a_exact / ANGSTROM,
        }
        if p.n_exp_range:
            d["n_exp_range"] = f"{p.n_exp_range[0]:g}..{p.n_exp_range[1]:g}"
        _print_block(name, d)
    return 0


# --- parser ------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinorbec", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; flags override its values")
    common.add_argument("--out", help="output directory for CSVs and manifest.txt")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None, help="BLAS/FFT thread cap")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="mean-field trajectory")
    s.add_argument("--dim", type=int)
    s.add_argument("--points", type=int)
    s.add_argument("--extent", type=float)
    s.add_argument("--kind", choices=["convolution", "contact"])
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", dest="t_end", type=float)
    s.add_argument("--sigma", type=float)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", parents=[common], help="many-body vs Hartree experiment")
    o.add_argument("--N", help="comma list, e.g. 2,3,4")
    o.add_argument("--points", type=int)
    o.add_argument("--extent", type=float)
    o.add_argument("--T", type=float)
    o.add_argument("--snapshots", type=int)
    o.add_argument("--K", type=float)
    o.add_argument("--tol", type=float)
    o.add_argument("-v", "--verbose", action="store_true")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bounds", parents=[common], help="Gronwall bounds and the Fig. 1 curve")
    b.add_argument("--preset")
    b.add_argument("--variant", choices=VARIANTS)
    b.add_argument("--t", type=float, default=0.1)
    b.add_argument("--t-grid", dest="t_grid", help="start:stop:num or comma list (s)")
    b.add_argument("--reading", choices=["as_valued", "as_printed"], default="as_valued")
    b.add_argument("--alpha0", type=float)
    b.add_argument("--n-exp", dest="n_exp", type=float)
    b.add_argument("--W0-over-hbar", dest="W0_over_hbar", type=float)
    b.add_argument("--T-max", dest="T_max", type=float)
    b.add_argument("--sigma", type=float)
    b.add_argument("--R", type=float)
    b.add_argument("--fig1", action="store_true", help="theory curve vs experimental series")
    b.add_argument("--n-tot", dest="n_tot", type=float, default=1.9e4)
    b.add_argument("--n-init", dest="n_init", type=float, default=9.5e3)
    b.add_argument("--experiment-csv", dest="experiment_csv")
    b.set_defaults(func=cmd_bounds)

    i = sub.add_parser("identities", parents=[common], help="randomised operator-identity suite")
    i.add_argument("--N", type=int)
    i.add_argument("--grid", type=int)
    i.add_argument("--extent", type=float)
    i.add_argument("--n-seeds", dest="n_seeds", type=int)
    i.set_defaults(func=cmd_identities)

    p = sub.add_parser("presets", parents=[common], help="print parameter presets")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)
    return ap


def run(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad flags; report those as validation failures
        return 0 if e.code in (0, None) else 1
    try:
        if args.threads:
            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except (NormDriftError, KrylovConvergenceError) as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 2
    except (ValidationError, ConfigError, BoundDomainError, ExperimentCSVError,
            DimensionCapError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
