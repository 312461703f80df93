"""Config parsing, experiment output plumbing, and the CLI."""

import json
import math

import numpy as np
import pytest

from wallsim.cli import main
from wallsim.config import (
    ExperimentConfig,
    load_config,
    wall_from_string,
    wall_to_string,
)
from wallsim.experiments import _fmt, run_experiment, write_outputs


def test_wall_string_roundtrip():
    wall = wall_from_string("0 2 0.25; 35 inf", horizon=40.0)
    assert len(wall.pieces) == 2
    assert wall.pieces[0].c == 2.0 and wall.pieces[0].v == 0.25
    assert wall.pieces[1].infinite
    again = wall_from_string(wall_to_string(wall), horizon=40.0)
    assert again.pieces == wall.pieces
    assert wall_from_string("none", 10.0) is None
    assert wall_from_string("", 10.0) is None
    assert wall_to_string(None) == "none"
    with pytest.raises(ValueError):
        wall_from_string("0 2", 10.0)


def test_experiment_config_helpers():
    cfg = ExperimentConfig("midtime", {"T": "80", "k_grid": "0.5, 1, 2",
                                       "alpha": "0.5"})
    assert cfg.get_float("T") == 80.0
    assert cfg.get_floats("k_grid") == (0.5, 1.0, 2.0)
    assert cfg.get_int("missing", 7) == 7
    with pytest.raises(KeyError):
        cfg.get_str("missing")
    resolved = cfg.resolved()
    assert resolved["experiment"] == "midtime"
    assert resolved["options.T"] == "80"
    with pytest.raises(ValueError):
        ExperimentConfig("nonsense")
    with pytest.raises(ValueError):
        ExperimentConfig("midtime", replicas=0)


def test_load_config_sections_and_overrides(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("[midtime]\nT = 80  # horizon\nreplicas = 5\nseed = 9\n"
                    "\n[prop31]\nn = 4\n")
    cfg = load_config(path, "midtime")
    assert cfg.replicas == 5 and cfg.seed == 9
    assert cfg.get_float("T") == 80.0   # inline comment stripped
    cfg2 = load_config(path, "midtime", replicas=2, seed=1, threads=2)
    assert cfg2.replicas == 2 and cfg2.seed == 1 and cfg2.threads == 2
    with pytest.raises(KeyError):
        load_config(path, "backpath")
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.ini", "midtime")


def test_wall_option_survives_inline_comment_rules(tmp_path):
    # ';' separates wall pieces and must not start a comment
    path = tmp_path / "exp.ini"
    path.write_text("[prop31]\nwall = 0 2 0.25; 35 inf\n")
    cfg = load_config(path, "prop31")
    wall = cfg.get_wall("wall", 40.0)
    assert len(wall.pieces) == 2 and wall.pieces[1].infinite


def test_fmt_handles_numpy_scalars():
    assert _fmt(np.float64(0.5)) == "0.5"
    assert _fmt(np.bool_(True)) == "1"
    assert _fmt(False) == "0"
    assert _fmt(np.int64(3)) == "3"
    assert _fmt(0.1) == repr(0.1)
    assert _fmt("x") == "x"


def _tiny_midtime(tmp_path, name="m.ini", k_grid="0.5 1 2"):
    path = tmp_path / name
    path.write_text(f"[midtime]\nalpha = 0.5\nT = 80\nk_grid = {k_grid}\n"
                    "replicas = 6\nseed = 77\n")
    return path


def test_outputs_byte_identical_across_reruns(tmp_path):
    path = _tiny_midtime(tmp_path)
    blobs = []
    for rerun in range(2):
        cfg = load_config(path, "midtime")
        res = run_experiment(cfg)
        csv_path, man_path = write_outputs(res, tmp_path / f"out{rerun}.csv")
        blobs.append((csv_path.read_bytes(), man_path.read_bytes()))
    assert blobs[0] == blobs[1]


def test_replica_extension_preserves_prefix(tmp_path):
    # replica-keyed streams: a longer run must reproduce the shorter run's
    # rows verbatim as its prefix
    path = _tiny_midtime(tmp_path)
    short = run_experiment(load_config(path, "midtime", replicas=3))
    long = run_experiment(load_config(path, "midtime", replicas=6))
    assert long.rows[:3] == short.rows


def test_threads_do_not_change_rows(tmp_path):
    path = _tiny_midtime(tmp_path)
    one = run_experiment(load_config(path, "midtime", threads=1))
    four = run_experiment(load_config(path, "midtime", threads=4))
    assert one.rows == four.rows


def test_manifest_contents(tmp_path):
    path = _tiny_midtime(tmp_path)
    cfg = load_config(path, "midtime")
    res = run_experiment(cfg)
    csv_path, man_path = write_outputs(res, tmp_path / "out.csv")
    header = csv_path.read_text().splitlines()[0]
    assert header == "replica,mid_index"
    man = json.loads(man_path.read_text())
    assert man["experiment"] == "midtime"
    assert man["config"]["options.T"] == "80"
    assert "code_version" in man
    assert isinstance(man["passed"], bool)
    assert "exceedance" in man["aggregates"]


def test_cli_pass_and_fail_exit_codes(tmp_path, capsys):
    ok = _tiny_midtime(tmp_path, "ok.ini")
    code = main(["midtime", "--config", str(ok),
                 "--out", str(tmp_path / "a.csv")])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    # a reversed threshold grid demands an increasing exceedance profile,
    # which this scale refutes
    bad = _tiny_midtime(tmp_path, "bad.ini", k_grid="2 1 0.05")
    code = main(["midtime", "--config", str(bad),
                 "--out", str(tmp_path / "b.csv")])
    assert code == 1
    assert "FAIL" in capsys.readouterr().err


def test_cli_rejects_unknown_experiment(tmp_path):
    with pytest.raises(SystemExit):
        main(["frobnicate", "--config", "x.ini"])
