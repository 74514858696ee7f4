import json

import numpy as np
import pytest

from robust4ws.cli import ConfigError, load_config, main
from robust4ws.synthesis import load_controller


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_unknown_section_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, "[tires]\npressure = 2.0\n")
    rc = main(["--config", cfg, "analyze", ])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    cfg = _write(tmp_path, "[vehicle]\nmass = 2.68\n")  # the key is 'm'
    assert main(["--config", cfg, "--out", str(tmp_path / "o"),
                 "analyze"]) == 2


def test_missing_config_rejected(tmp_path):
    assert main(["--config", str(tmp_path / "nope.ini"), "analyze"]) == 2


def test_invalid_vehicle_value(tmp_path):
    cfg = _write(tmp_path, "[vehicle]\nm = -1.0\n")
    assert main(["--config", cfg, "--out", str(tmp_path / "o"),
                 "analyze"]) == 2


def test_bad_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ROBUST4WS_THREADS", "0")
    assert main(["--out", str(tmp_path / "o"), "analyze"]) == 2
    monkeypatch.setenv("ROBUST4WS_THREADS", "many")
    assert main(["--out", str(tmp_path / "o"), "analyze"]) == 2


def test_load_config_defaults():
    cfg = load_config(None)
    assert cfg == {"vehicle": {}, "uncertainty": {}, "synthesis": {},
                   "bench": {}}


def test_analyze_outputs(tmp_path, capsys):
    out = tmp_path / "an"
    assert main(["--out", str(out), "analyze"]) == 0
    head = json.loads(capsys.readouterr().out)
    assert head["stable"] is True
    csv = (out / "damping_surface.csv").read_text().strip().split("\n")
    assert csv[0] == "mu,v,zeta"
    assert len(csv) == 10 * 13 + 1
    report = json.loads((out / "analysis.json").read_text())
    assert len(report["phase_portrait"]) == 49
    assert all(e[0] < 0.0 for e in report["eigenvalues"])


def test_synth_baseline_round_trip(tmp_path, capsys):
    out = tmp_path / "sy"
    assert main(["--out", str(out), "synth", "--baseline"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["gamma1"] is None
    ctrl = load_controller((out / "controller_baseline.txt").read_text())
    assert ctrl.K.shape == (4, 2)
    cert = json.loads((out / "certification.json").read_text())
    assert cert["worst_hinf"] > 0.0


def test_simulate_with_controller(tmp_path, capsys):
    out = tmp_path / "sy"
    assert main(["--out", str(out), "synth", "--baseline"]) == 0
    capsys.readouterr()
    sim = tmp_path / "sim"
    assert main(["--out", str(sim), "simulate", "--maneuver", "lane-change",
                 "--controller",
                 str(out / "controller_baseline.txt")]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["maneuver"] == "lane-change"
    assert 0.0 < stats["rmse"] < 1.0
    assert (sim / "sim_lane-change.csv").exists()


def test_simulate_open_loop_default(tmp_path, capsys):
    sim = tmp_path / "sim"
    assert main(["--out", str(sim), "simulate"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["maneuver"] == "straight"
    assert (sim / "sim_straight.csv").exists()


def test_simulate_unknown_maneuver(tmp_path):
    assert main(["--out", str(tmp_path / "s"), "simulate", "--maneuver",
                 "donut"]) == 2


def test_synth_infeasible_region(tmp_path, capsys):
    cfg = _write(tmp_path, "[synthesis]\nalpha = -1e6\n")
    rc = main(["--config", cfg, "--out", str(tmp_path / "o"), "synth"])
    assert rc == 1
    assert "compute error" in capsys.readouterr().err


def test_bench_single_maneuver(tmp_path, capsys):
    out = tmp_path / "b"
    rc = main(["--out", str(out), "--format", "json", "bench",
               "--maneuver", "lane-change"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    row = payload["table"]["lane-change"]
    assert set(row) == {"open-loop", "non-robust", "robust"}
    assert row["robust"] < row["open-loop"]
    assert (out / "bench.json").exists()
    assert (out / "run_lane-change_robust.csv").exists()


def test_bench_unknown_maneuver(tmp_path):
    assert main(["--out", str(tmp_path / "b"), "bench", "--maneuver",
                 "donut"]) == 2
