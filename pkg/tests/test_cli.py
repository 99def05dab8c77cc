"""CLI: parsing, config files, exit codes, artifacts."""

import csv
import json

import pytest

from hystctl.cli import main, parse_config


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh)
    return str(path)


# ---------------------------------------------------------------------------
# parsing

def test_parse_experiment_flags():
    cfg = parse_config(["sim", "thm2_convergence", "--k", "10,20,40",
                        "--rho", "0.2", "--step", "1e-3"])
    assert cfg.experiment == "thm2_convergence"
    assert cfg.params == {"k": [10, 20, 40], "rho": 0.2, "step": 1e-3}


def test_parse_unique_prefix():
    cfg = parse_config(["sim", "thm2"])
    assert cfg.experiment == "thm2_convergence"


def test_parse_config_file(tmp_path):
    path = write_json(tmp_path / "cfg.json",
                      {"experiment": "fig5_density", "j": [10, 20, 40]})
    cfg = parse_config(["sim", "--config", path])
    assert cfg.experiment == "fig5_density"
    assert cfg.params == {"j": [10, 20, 40]}


def test_flags_override_config(tmp_path):
    path = write_json(tmp_path / "cfg.json",
                      {"experiment": "fig5_density", "j": [10], "rho": 0.1})
    cfg = parse_config(["sim", "--config", path, "--rho", "0.3"])
    assert cfg.params == {"j": [10], "rho": 0.3}


# ---------------------------------------------------------------------------
# exit codes

def test_usage_error_negative_rho(capsys):
    assert main(["fig5_density", "--rho", "-1"]) == 2
    assert "usage error" in capsys.readouterr().err


def test_usage_error_unknown_experiment(capsys):
    assert main(["sim", "not_an_experiment"]) == 2


def test_usage_error_unknown_config_key(tmp_path, capsys):
    path = write_json(tmp_path / "cfg.json",
                      {"experiment": "fig5_density", "banana": 1})
    assert main(["sim", "--config", path]) == 2


def test_usage_error_flag_not_allowed(capsys):
    # fig5_density takes no seed
    assert main(["sim", "fig5_density", "--seed", "3"]) == 2


def test_domain_error_exit_1(tmp_path, capsys):
    sig = write_json(tmp_path / "u.json", {"knots": [[0.0, 0.0], [1.0, 1.0]]})
    # seed outside the admissible strip
    assert main(["play", "--input", sig, "--w0", "5.0", "--rho", "0.2"]) == 1
    assert "domain error" in capsys.readouterr().err


def test_missing_file_exit_1(capsys):
    assert main(["play", "--input", "/nonexistent.json",
                 "--w0", "0.0", "--rho", "0.2"]) == 1


def test_experiment_pass_exit_0(tmp_path, capsys):
    out = tmp_path / "rows.csv"
    man = tmp_path / "man.json"
    code = main(["fig3_surjectivity", "--k", "10",
                 "--out", str(out), "--manifest", str(man)])
    assert code == 0
    assert "fig3_surjectivity: pass" in capsys.readouterr().out
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["knot_gap"]) < 1e-10
    assert json.load(open(man))["verdict"] == "pass"


# ---------------------------------------------------------------------------
# operator subcommands

def test_play_subcommand(tmp_path):
    sig = write_json(tmp_path / "u.json",
                     {"knots": [[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]]})
    out = tmp_path / "w.csv"
    assert main(["play", "--input", sig, "--w0", "0.0", "--rho", "1.0",
                 "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "w"]
    assert float(rows[-1][1]) == pytest.approx(1.0)


def test_relay_subcommand(tmp_path, capsys):
    sig = write_json(tmp_path / "z.json", {"knots": [[0.0, 0.0], [1.0, -1.0]]})
    assert main(["relay", "--input", sig, "--lo", "-0.5", "--hi", "0.5",
                 "--out0", "1"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "time,old,new"
    assert float(out[1].split(",")[0]) == pytest.approx(0.5)


def test_bank_subcommand(tmp_path):
    sig = write_json(tmp_path / "z.json", {"knots": [[0.0, -1.0], [1.0, 1.0]]})
    out = tmp_path / "wk.csv"
    ev = tmp_path / "events.csv"
    assert main(["bank", "--input", sig, "--k", "4", "--nplus", "0",
                 "--out", str(out), "--events", str(ev)]) == 0
    with open(ev) as fh:
        events = list(csv.reader(fh))[1:]
    assert len(events) == 3  # crossings of 1/4, 1/2, 3/4 (1.0 only touched)


def test_config_driven_sim(tmp_path):
    out = tmp_path / "traj.csv"
    path = write_json(tmp_path / "sim.json", {
        "system": "heisenberg",
        "controls": [{"grid": [0.0, 1.0], "values": [1.0]},
                     {"grid": [0.0, 1.0], "values": [1.0]}],
        "z0": [0.0, 0.0, 0.0],
        "step": 1e-2,
    })
    assert main(["sim", "--config", path, "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "z1", "z2", "z3"]
    assert float(rows[-1][3]) == pytest.approx(0.5, abs=1e-9)


def test_help_exits_zero():
    with pytest.raises(SystemExit):
        parse_config(["--help"])
    assert main(["--help"]) == 0
