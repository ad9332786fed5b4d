import json
import subprocess
import sys

import numpy as np
import pytest

from taylor_rhc import InvalidInputError, default_config, load_config
from taylor_rhc.cli import main
from taylor_rhc.config import apply_override, config_system


def test_default_config_is_the_two_state_example(example_sys):
    cfg = load_config()
    s = config_system(cfg)
    np.testing.assert_array_equal(s.A, example_sys.A)
    assert cfg["sweep"]["penalties"] == [1, 2, 3]


def test_overrides():
    cfg = apply_override(default_config(), "sweep.tau_values=[0.4]")
    assert cfg["sweep"]["tau_values"] == [0.4]
    cfg = apply_override(cfg, "penalty=taylor3")
    assert cfg["penalty"] == "taylor3"
    with pytest.raises(InvalidInputError, match="unknown"):
        apply_override(cfg, "sweep.bogus=1")
    with pytest.raises(InvalidInputError):
        apply_override(cfg, "no-equals-sign")


def test_config_file_and_system_file(tmp_path):
    (tmp_path / "sys.json").write_text(json.dumps(default_config()["system"]))
    (tmp_path / "run.json").write_text(json.dumps({"system_file": "sys.json", "y0": [0.5, 0.0]}))
    cfg = load_config(tmp_path / "run.json")
    assert config_system(cfg).alpha == 0.1
    (tmp_path / "bad.json").write_text(json.dumps({"sytem": {}}))
    with pytest.raises(InvalidInputError, match="unknown config key"):
        load_config(tmp_path / "bad.json")
    with pytest.raises(InvalidInputError):
        load_config(tmp_path / "missing.json")


def test_riccati_command(capsys, tmp_path):
    assert main(["riccati", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "lambda = 1.49999999" in out
    data = json.loads((tmp_path / "riccati.json").read_text())
    assert abs(data["lambda"] - 1.5) < 1e-9


def test_exit_codes(capsys, tmp_path):
    assert main(["riccati", "--set", "system.B=[0,1]", "--set", "system.A=[[1,0],[0,-1]]"]) == 2
    assert "PBH" in capsys.readouterr().err
    assert main(["riccati", "--set", "nope=1"]) == 1
    assert main(["riccati", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["riccati", "--set", "system.alpha=-1"]) == 1
    assert main(["paper-tables", "--jobs", "0"]) == 1


def test_solve_and_rhc_commands(capsys, tmp_path):
    assert main(["solve", "--set", "T=0.5", "--out", str(tmp_path)]) == 0
    sol = json.loads((tmp_path / "solve.json").read_text())
    assert sol["converged"] and len(sol["u_left"]) == 50
    assert main(["rhc", "--set", "tau=1.0", "--out", str(tmp_path)]) == 0
    rhc = json.loads((tmp_path / "rhc.json").read_text())
    assert rhc["windows"] == 5 and rhc["suboptimality"] >= -1e-9
    # on (0, 2) the reference is not converged in the horizon: a numerical failure, not a crash
    assert main(["rhc", "--set", "L=2.0", "--set", "tau=0.5"]) == 2
    assert "reference control moves" in capsys.readouterr().err


def test_stable_system_without_output(capsys):
    # C = 0 with stable A: Pi = 0
    args = ["riccati", "--set", "system.A=[[-1,0.5],[0,-2]]", "--set", "system.C=[[0,0]]"]
    assert main(args) == 0
    out = capsys.readouterr().out
    rows = out.split("A_pi")[0].splitlines()[1:]
    assert all(abs(float(x)) == 0.0 for r in rows for x in r.split())


def test_paper_tables_small_grid_is_reproducible(tmp_path, capsys):
    args = ["paper-tables", "--set", "sweep.tau_values=[0.4,1.0]", "--set", "sweep.T_values=[1.0,1.6]",
            "--set", "sweep.penalties=[2]"]
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [main(args + ["--out", str(a)]), main(args + ["--out", str(b), "--format", "csv"])]
    assert codes[0] == codes[1]
    for name in ("error_k2.csv", "rho_k2.csv", "summary.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert main(args + ["--out", str(a), "--format", "md"]) == codes[0]
    assert (a / "error_k2.md").read_text().startswith("| tau\\T |")


def test_linear_tables_pass(tmp_path, capsys):
    args = ["paper-tables", "--set", "system.N=[[0,0],[0,0]]", "--set", "sweep.penalties=[2]",
            "--set", "sweep.tau_values=[0.1,1.0]", "--set", "sweep.T_values=[1.0,2.8]", "--out", str(tmp_path)]
    assert main(args) == 0
    assert "[PASS] linear-quadratic exactness k=2" in (tmp_path / "summary.txt").read_text()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "taylor_rhc.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("taylor-rhc ")
