import csv
import json

import pytest

from kinklab.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, dispatch, fmt


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_spectrum_row_and_manifest(tmp_path):
    assert dispatch(["spectrum", "--k", "0.05", "--out", str(tmp_path)]) == EXIT_OK
    rows = _rows(tmp_path / "spectrum.csv")
    assert rows[0] == ["k", "zeta0", "zeta1", "zeta0_over_k3"]
    # the ratio tends to 1/3 with an O(k) correction
    assert abs(float(rows[1][3]) - 1 / 3) <= 1.0 * 0.05
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["subcommand"] == "spectrum" and m["outputs"] == ["spectrum.csv"]
    assert {"version", "wall_seconds", "config"} <= set(m)


def test_missing_config(tmp_path, capsys):
    code = dispatch(["simulate", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)])
    assert code == EXIT_INVALID
    assert "missing.cfg" in capsys.readouterr().err


def test_usage_errors(tmp_path):
    assert dispatch(["spectrum", "--k", "0.05", "--bogus", "--out", str(tmp_path)]) == EXIT_USAGE
    assert dispatch(["nonsense"]) == EXIT_USAGE
    assert dispatch(["spectrum", "--k", "0.05", "--threads", "0"]) == EXIT_USAGE


def test_invalid_input_exit_code(tmp_path):
    assert dispatch(["semigroup", "--k", "-1", "--t", "2", "--out", str(tmp_path)]) == EXIT_INVALID


def test_env_default_out(tmp_path, monkeypatch):
    monkeypatch.setenv("KINKLAB_OUT", str(tmp_path / "env"))
    assert dispatch(["asymptotics", "--t", "100", "--n", "5"]) == EXIT_OK
    rows = _rows(tmp_path / "env" / "asymptotics.csv")
    assert len(rows) == 6 and float(rows[1][0]) == 0.0


def test_round_trip_format():
    for v in (0.1, 1 / 3, 2.0 ** -1074, 1e300):
        assert float(fmt(v)) == v


def test_semigroup_short_time(tmp_path):
    args = ["semigroup", "--k", "0.5", "--t", "0.5", "--L", "20", "--dx", "1", "--out", str(tmp_path)]
    assert dispatch(args) == EXIT_OK
    rows = _rows(tmp_path / "semigroup.csv")
    assert rows[0] == ["x", "y", "K", "K0", "K1", "S"] and len(rows) == 1 + 41 * 41
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config"]["method"] == "timestepper"


def test_simulate_deterministic(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text("L = 20\nN = 32\nLperp = 32\nM = 16\ndt = 0.05\nT = 1\n")
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"run{threads}"
        assert dispatch(["simulate", "--config", str(cfg), "--out", str(out), "--threads", threads]) == EXIT_OK
        outs.append((out / "diagnostics.csv").read_bytes())
        m = json.loads((out / "manifest.json").read_text())
        assert m["config"]["N"] == 32 and "diagnostics.csv" in m["outputs"]
    assert outs[0] == outs[1]
    header = outs[0].decode().splitlines()[0]
    assert header == "t,center_amp,half_width,mass,norm_X,norm_t,A_est"
