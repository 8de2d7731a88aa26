import subprocess
import sys

import numpy as np
import pytest

from spinorbec.cli import run
from spinorbec.config import ConfigError, build, parse_number_list, read_ini, to_ini
from spinorbec.theorem import TheoremConfig


def test_number_list():
    assert parse_number_list("(1, 2.5, 1+2i)") == (1.0, 2.5, 1 + 2j)


def test_build_flags_win(tmp_path):
    f = tmp_path / "c.ini"
    f.write_text("[oracle]\npoints = 8   # small\nT = 0.5\nweights = 1, 0, 1\n")
    ini = read_ini(f)
    cfg = build(TheoremConfig, ini["oracle"], {"T": 0.25, "points": None})
    assert cfg.points == 8 and cfg.T == 0.25 and cfg.weights == (1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        build(TheoremConfig, {"bogus": "1"})
    with pytest.raises(ConfigError):
        build(TheoremConfig, {"points": "abc"})
    with pytest.raises(ConfigError):
        read_ini(tmp_path / "missing.ini")


def test_ini_roundtrip(tmp_path):
    text = to_ini({"a": {"x": 0.1, "w": (1.0, 2.0), "s": "hi"}})
    f = tmp_path / "r.ini"
    f.write_text(text)
    back = read_ini(f)
    assert back["a"] == {"x": "0.1", "w": "1.0, 2.0", "s": "hi"}
    cfg = build(TheoremConfig, {"T": "0.1", "weights": back["a"]["w"] + ", 3"})
    assert cfg.weights == (1.0, 2.0, 3.0)


def test_bounds_cli_phys1(capsys, tmp_path):
    code = run(["bounds", "--preset", "rb87", "--variant", "phys1", "--t", "0.1", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    b = float(out.splitlines()[0].split("bound =")[1])
    assert b <= 0.015
    man = (tmp_path / "manifest.txt").read_text()
    assert "[versions]" in man and "[config.bounds]" in man and "[timings]" in man
    assert (tmp_path / "bound_phys1.csv").exists()


def test_bounds_cli_domain_error(capsys):
    assert run(["bounds", "--variant", "phys4", "--T-max", "0.3", "--t", "0.1"]) == 1
    assert "Duhamel" in capsys.readouterr().err


def test_fig1_cli(capsys, tmp_path):
    assert run(["bounds", "--fig1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "theory_above_experiment = True" in out
    rows = (tmp_path / "fig1_theory.csv").read_text().splitlines()
    assert rows[0] == "t_sec,bound" and len(rows) == 82


def test_presets_cli(capsys):
    assert run(["presets", "rb87"]) == 0
    out = capsys.readouterr().out
    assert "a0_angstrom = 58.2" in out and "c2_angstrom = -0.533333" in out
    assert run(["presets", "k39"]) == 1


def test_identities_cli_byte_identical(tmp_path, capsys):
    args = ["identities", "--N", "3", "--grid", "4", "--seed", "7", "--n-seeds", "2"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "identities_report.txt").read_bytes()
    assert a == (tmp_path / "b" / "identities_report.txt").read_bytes()
    assert b"overall PASS" in a
    assert "overall = PASS" in (tmp_path / "a" / "manifest.txt").read_text()


def test_solve_cli(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[solve]\nkind = contact\ng0 = 2.0\ng2 = -0.5\npoints = 64\n")
    assert run(["solve", "--config", str(cfg), "--t-end", "0.1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0].startswith("t,norm")
    assert "kind = contact" in (tmp_path / "manifest.txt").read_text()


def test_solve_cli_bad_kind(capsys):
    assert run(["solve", "--kind", "lattice"]) == 1


def test_solve_cli_norm_abort(tmp_path, capsys):
    cfg = tmp_path / "s.ini"
    cfg.write_text("[solve]\nnorm_tol = -1\n")
    assert run(["solve", "--config", str(cfg), "--t-end", "0.05"]) == 2


def test_oracle_cli_small(tmp_path, capsys):
    args = ["oracle", "--N", "2", "--points", "8", "--T", "0.2", "--snapshots", "2"]
    assert run(args + ["--out", str(tmp_path / "a")]) == 0
    assert run(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "oracle_N2.csv").read_text()
    assert a == (tmp_path / "b" / "oracle_N2.csv").read_text()
    data = np.loadtxt(tmp_path / "a" / "oracle_N2.csv", delimiter=",", skiprows=1)
    assert data.shape == (3, 6)
    assert np.all(data[:, 1] <= data[:, 3])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "spinorbec.cli", "presets"], capture_output=True, text=True)
    assert r.returncode == 0 and "[rb87]" in r.stdout
