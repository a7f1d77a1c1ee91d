import json

import numpy as np
import pytest

from lll_lab.cli import main
from lll_lab.fock import CoeffState


def _manifest(path):
    return json.loads((path.parent / (path.name + ".manifest.json")).read_text())


def test_no_command_is_a_usage_error(capsys):
    assert main([]) == 2
    assert main(["simulate", "--dt", "fast"]) == 2


def test_random_init_requires_seed(tmp_path, capsys):
    assert main(["simulate", "--n", "8"]) == 2
    assert "--seed" in capsys.readouterr().err


def test_simulate_is_reproducible(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    argv = ["simulate", "--n", "16", "--seed", "3", "--dt", "0.01", "--t-end", "0.5", "--stride", "10"]
    assert main(argv + ["-o", str(a)]) == 0
    assert main(argv + ["-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    m = _manifest(a)
    assert m["command"] == "simulate" and m["seed"] == 3 and m["N"] == 16
    assert {"version", "outputs", "wall_clock_seconds", "parameters"} <= set(m)
    assert str(a) in m["outputs"]


def test_catalog_emit_and_residual(tmp_path, capsys):
    path = tmp_path / "psi.json"
    assert main(["catalog", "emit", "--family", "psi_b", "--b", "1.0", "--n", "64", "-o", str(path)]) == 0
    assert CoeffState.load(path).coeffs.size == 64
    assert _manifest(path)["N"] == 64
    capsys.readouterr()
    assert main(["residual", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stationary"]
    assert main(["catalog", "list"]) == 0


def test_residual_fails_on_generic_state(tmp_path):
    from lll_lab.fock import random_state

    path = tmp_path / "r.json"
    CoeffState(random_state(16, np.random.default_rng(0))).save(path)
    assert main(["residual", str(path)]) == 1
    assert main(["residual", str(tmp_path / "missing.json")]) == 2


def test_zeros_subcommand(tmp_path, capsys):
    path = tmp_path / "chi.json"
    assert main(["catalog", "emit", "--family", "chi_alpha", "--alpha", "1", "--n", "128", "-o", str(path)]) == 0
    capsys.readouterr()
    csv = tmp_path / "counts.csv"
    assert main(["zeros", str(path), "--radius", "4", "--jensen", "3", "--counts-csv", str(csv)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["roots"]) == 3
    assert csv.read_text().startswith("R,")


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "lab.ini"
    cfg.write_text("[defaults]\nn = 12\n\n[simulate]\nseed = 5\nt-end = 0.1\ndt = 0.01\n")
    out = tmp_path / "s.jsonl"
    assert main(["--config", str(cfg), "simulate", "-o", str(out)]) == 0
    m = _manifest(out)
    assert m["seed"] == 5 and m["N"] == 12
    assert main(["--config", str(tmp_path / "nope.ini"), "simulate"]) == 2


def test_convert_h(capsys):
    assert main(["convert-h", "--h", "0.05", "--na", "10", "--omega2", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mu_below_kappa0"] and "infinitely many zeros" in out["classification"]
    assert main(["convert-h", "--h", "2", "--na", "10", "--omega2", "1"]) == 2


def test_stability_table(capsys):
    assert main(["stability", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["linearization"]["unstable_modes"] == [0, 4]


def test_bifurcate_writes_index(tmp_path, capsys):
    outdir = tmp_path / "branch"
    assert main(["bifurcate", "--k0", "2", "--s-max", "0.02", "--ds", "0.01", "--n", "48",
                 "--outdir", str(outdir)]) == 0
    assert (outdir / "index.csv").exists()


def test_sweep_mu_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep-mu", "--num", "3", "--n", "16", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4 and lines[0].startswith("mu")


def test_repro(capsys):
    assert main(["repro", "list"]) == 0
    assert "carlen" in capsys.readouterr().out
    assert main(["repro", "carlen"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["repro", "nonsense"]) == 2


def test_dict_check(capsys):
    assert main(["dict-check"]) == 0
