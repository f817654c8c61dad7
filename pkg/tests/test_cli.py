import json

import numpy as np
import pytest

from ccscatter.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)] if argv[0] not in ("indexsets",) else list(argv))


def test_indicial_constant_column(tmp_path):
    assert run(tmp_path, "indicial", "--zeta", "0.9") == 0
    data = np.genfromtxt(tmp_path / "indicial.csv", delimiter=",", skip_header=2)
    assert np.allclose(data[:, 2], 0.9) and np.all(data[:, 3] == 0)


def test_indicial_critical_line(tmp_path):
    assert run(tmp_path, "indicial", "--profile", "0:1,1:0.3", "--zeta", "0.5+0.6j") == 0
    data = np.genfromtxt(tmp_path / "indicial.csv", delimiter=",", skip_header=2)
    in_w = data[:, 4] == 1
    assert np.all(data[in_w, 3] != 0) and np.all(data[~in_w, 3] == 0)


def test_indicial_resolvent_set(tmp_path):
    assert run(tmp_path, "indicial", "--profile", "0:1,1:0.3", "--zeta", "0.9") == 0
    data = np.genfromtxt(tmp_path / "indicial.csv", delimiter=",", skip_header=2)
    assert np.all(data[:, 3] == 0) and data[:, 2].min() > 0.5


def test_regions(tmp_path):
    assert run(tmp_path, "regions", "--profile", "0:1,1:0.3", "--zeta", "0.5+0.6j") == 0
    rec = json.loads((tmp_path / "regions.json").read_text())
    assert len(rec["crossover_points"]) == 2 and rec["regular_crossover"]


def test_solve_ladder_count(tmp_path):
    argv = ["solve", "--mode", "1", "--nt", "257", "--xmax", "40", "--zeta", "0.5+0.7j",
            "--eps-ladder", "1e-1:4"]
    assert run(tmp_path, *argv) == 0
    assert len(list(tmp_path.glob("field_*.csv"))) == 4
    diags = json.loads((tmp_path / "diagnostics.json").read_text())
    assert len(diags) == 4 and {"epsilon", "weighted_diff", "radiation", "residual"} <= set(diags[0])


def test_solve_deterministic(tmp_path):
    argv = ["solve", "--mode", "2", "--nt", "129", "--xmax", "20", "--zeta", "0.8"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([*argv, "--out", str(a)]) == 0
    assert main([*argv, "--out", str(b)]) == 0
    assert (a / "field_000.csv").read_bytes() == (b / "field_000.csv").read_bytes()


def test_la_sweep_mode(tmp_path):
    argv = ["la-sweep", "--mode", "1", "--nt", "513", "--xmax", "40", "--zeta", "0.5+0.7j",
            "--eps-ladder", "1e-1:5"]
    assert run(tmp_path, *argv) == 0
    rec = json.loads((tmp_path / "diagnostics.json").read_text())
    assert len(rec["records"]) == 5
    assert (tmp_path / "field_extrapolated.csv").exists()


def test_scatter_table(tmp_path):
    assert run(tmp_path, "scatter", "--zeta", "0.75", "--modes", "1:2") == 0
    lines = (tmp_path / "scatter_modes.csv").read_text().splitlines()
    assert lines[1] == "m,re_S,im_S,re_symbol,im_symbol,rel_err"
    errs = [float(line.split(",")[-1]) for line in lines[2:]]
    assert len(errs) == 2 and max(errs) < 1e-6


def test_symbol(tmp_path, capsys):
    assert run(tmp_path, "symbol", "--zeta", "0.75") == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["symbol"][0] == pytest.approx(-0.95598, abs=1e-5)


def test_indexsets_compose(capsys):
    assert main(["indexsets", "--compose", "M", "F"]) == 0
    out = capsys.readouterr().out.split()
    assert out[1::2] == ["σ_l", "σ_r", "2σ_f", "[n/2]", "[n/2]", "[1/2]_+"]


def test_error_record(tmp_path, capsys):
    code = run(tmp_path, "solve", "--zeta", "0.5+0.6j", "--nt", "64", "--ny", "16")
    assert code == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["error"] == "ConfigError" and rec["command"] == "solve"


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[spectral]\nzeta = 0.9\n[grid]\nmode = 1.0\nn_t = 129\nx_max = 30\n")
    assert run(tmp_path, "solve", "--config", str(cfg)) == 0
    head = (tmp_path / "field_000.csv").read_text().splitlines()[0]
    assert json.loads(head[2:])["grid"]["n_t"] == 129


def test_verify_subset(tmp_path, capsys):
    assert main(["verify", "--only", "1,6", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(line.startswith("[PASS]") for line in out)
    rec = json.loads((tmp_path / "verify.json").read_text())
    assert rec["passed"] and [c["number"] for c in rec["criteria"]] == [1, 6]
