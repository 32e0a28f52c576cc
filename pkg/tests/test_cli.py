import json

import numpy as np
import pytest

from capax.cli import main, parse_args, parse_atoms, parse_set_spec
from capax.grid import (Field, Grid, Params, ball_mask, cube_mask, field_from_json,
                        field_to_json)
from capax.capacity import capacity


def run_cli(*args):
    return main(list(args))


def test_parse_set_spec(g64):
    m = parse_set_spec(g64, "ball:0.25")
    assert m == ball_mask(g64, 0.25)
    u = parse_set_spec(g64, "ball:0.1+cube:0.6")
    assert u == (ball_mask(g64, 0.1) | cube_mask(g64, 0.6))
    with pytest.raises(ValueError):
        parse_set_spec(g64, "blob:1")
    with pytest.raises(ValueError):
        parse_set_spec(g64, "annulus:0.5")


def test_parse_atoms():
    pos, masses = parse_atoms("0.1:1.0;-0.2:2.5", 1)
    assert pos == [[0.1], [-0.2]] and masses == [1.0, 2.5]
    pos2, masses2 = parse_atoms("0.1,0.2:1.0", 2)
    assert pos2 == [[0.1, 0.2]]
    with pytest.raises(ValueError):
        parse_atoms("0.1,0.2:1.0", 1)


def test_capacity_command_matches_library(tmp_path):
    out = tmp_path / "cap.json"
    code = run_cli("capacity", "--set", "ball:0.25", "--alpha", "0.4", "--s", "2",
                   "--n", "1", "--N", "64", "--tol", "1e-7",
                   "--output", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    lib = capacity(ball_mask(Grid(1, 1.0, 64), 0.25), Params(1, 0.4, 2.0), tol=1e-7)
    assert doc["value"] == lib.value
    assert doc["converged"]
    manifest = json.loads((tmp_path / "cap.json.manifest.json").read_text())
    assert manifest["config"]["command"] == "capacity"
    assert "wall_time_s" in manifest


def test_cli_byte_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--check", "csim", "--n", "1", "--alpha", "0.4", "--s", "2",
            "--N", "32", "--count", "3", "--levels", "16", "--seed", "7"]
    assert run_cli(*args, "--output", str(a)) == 0
    assert run_cli(*args, "--output", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_verify_ibp_identity(tmp_path, capsys):
    code = run_cli("verify", "--check", "ibp", "--t", "1", "--n", "1", "--alpha",
                   "0.4", "--s", "2", "--N", "32", "--count", "3")
    assert code == 0
    assert "max_ratio=1" in capsys.readouterr().out


def test_potential_and_choquet_commands(tmp_path):
    g = Grid(1, 1.0, 32)
    f = Field(g, ball_mask(g, 0.3).members.astype(float), nonneg=True)
    fpath = tmp_path / "field.json"
    fpath.write_text(field_to_json(f))
    out = tmp_path / "pot.json"
    assert run_cli("potential", "--input", str(fpath), "--alpha", "0.4",
                   "--output", str(out)) == 0
    pot = field_from_json(out.read_text())
    from capax.potentials import riesz_potential

    assert np.array_equal(pot.values, riesz_potential(f, 0.4).values)
    cout = tmp_path / "choq.json"
    assert run_cli("choquet", "--input", str(fpath), "--alpha", "0.4", "--s", "2",
                   "--N", "32", "--output", str(cout)) == 0
    assert json.loads(cout.read_text())["value"] > 0


def test_wolff_command(tmp_path):
    out = tmp_path / "w.json"
    code = run_cli("wolff", "--atoms", "0.0:1.0", "--alpha", "0.4", "--s", "2",
                   "--n", "1", "--N", "64", "--output", str(out))
    assert code == 0
    w = field_from_json(out.read_text())
    assert np.all(w.values > 0)


def test_norm_command(tmp_path):
    g = Grid(1, 1.0, 32)
    fpath = tmp_path / "field.json"
    fpath.write_text(field_to_json(ball_mask(g, 0.2).indicator()))
    out = tmp_path / "norm.json"
    code = run_cli("norm", "--norm", "f", "--input", str(fpath), "--n", "1",
                   "--alpha", "0.4", "--s", "2", "--r", "1.0", "--output", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["upper"] > 0 and doc["lower"] <= doc["upper"]
    code2 = run_cli("norm", "--norm", "lqcap", "--q", "1.5", "--input", str(fpath),
                    "--n", "1", "--alpha", "0.4", "--s", "2", "--N", "32",
                    "--levels", "16")
    assert code2 == 0


def test_report_command(tmp_path, capsys):
    rep = tmp_path / "rep.json"
    run_cli("verify", "--check", "ibp", "--t", "2", "--n", "1", "--alpha", "0.4",
            "--s", "2", "--N", "32", "--count", "2", "--output", str(rep))
    capsys.readouterr()
    csv_out = tmp_path / "rep.csv2"
    assert run_cli("report", "--input", str(rep), "--output", str(csv_out)) == 0
    out = capsys.readouterr().out
    assert "inequality: ibp" in out
    assert csv_out.read_text().startswith("sample_id,lhs,rhs,ratio")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command_ignored=x\n"[0:0] +
                   "n=1\nalpha=0.4\ns=2.0\nN=32\nset=ball:0.25\ntol=1e-7\n")
    out = tmp_path / "out.json"
    code = run_cli("capacity", "--config", str(cfg), "--output", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    # flag overrides the config value
    out2 = tmp_path / "out2.json"
    code = run_cli("capacity", "--config", str(cfg), "--set", "ball:0.1",
                   "--output", str(out2))
    assert code == 0
    assert json.loads(out2.read_text())["value"] < doc["value"]


def test_invalid_inputs_exit_one(tmp_path, capsys):
    assert run_cli("capacity", "--n", "1", "--N", "32") == 1           # no set
    assert run_cli("capacity", "--set", "blob:1", "--N", "32") == 1    # bad spec
    assert run_cli("verify", "--N", "32") == 1                         # no check
    assert run_cli("norm", "--norm", "m", "--N", "32") == 1            # no input
    assert run_cli("capacity", "--set", "ball:0.2", "--alpha", "0.9") == 1  # bad params
    assert run_cli("report", "--input", str(tmp_path / "missing.json")) == 1
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("whatever\n")
    assert run_cli("capacity", "--config", str(bad_cfg)) == 1
    capsys.readouterr()


def test_solver_degradation_exit_two(tmp_path, monkeypatch):
    import capax.cli as cli_mod
    from capax.capacity import CapacityResult
    from capax.grid import Field

    g = Grid(1, 1.0, 32)

    def fake_capacity(mask, params, kind="riesz", tol=1e-6, **kw):
        return CapacityResult(1.0, Field(g, np.zeros(g.shape), nonneg=True),
                              1e-3, 1e-2, 30, False, None)

    monkeypatch.setattr(cli_mod, "capacity", fake_capacity)
    out = tmp_path / "deg.json"
    code = run_cli("capacity", "--set", "ball:0.2", "--n", "1", "--N", "32",
                   "--output", str(out))
    assert code == 2
    assert json.loads(out.read_text())["converged"] is False
