import json

import numpy as np
import pytest

from polarcascade.cli import cli_dispatch
from polarcascade.config import ConfigError, load_config, resolve
from polarcascade.trajectory import (Trajectory, TrajectoryFormatError, load_trajectory,
                                     save_trajectory)


@pytest.fixture(autouse=True)
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("POLARCASCADE_OUTDIR", str(tmp_path / "default"))
    return tmp_path


def call(capsys, *argv):
    code = cli_dispatch(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


# -- config ----------------------------------------------------------------------

def test_resolve_precedence():
    cfg = resolve("simulate", {"seed": 7, "alpha": 0.3}, {"seed": 42})
    assert cfg["seed"] == 42 and cfg["alpha"] == 0.3 and cfg["beta"] == 0.7


def test_resolve_unknown_key():
    with pytest.raises(ConfigError) as exc:
        resolve("classify", {"n": 5})
    assert exc.value.key == "n"


def test_resolve_range_message():
    with pytest.raises(ConfigError, match=r"alpha: 1.5 outside legal range \[0, 1\]"):
        resolve("integrate", {"alpha": 1.5})


def test_resolve_theta0_forms():
    assert resolve("integrate", {"theta0": 0.6})["theta0"] == [0.6, 0.6]
    assert resolve("integrate", {"theta0": [0.2]})["theta0"] == [0.2, 0.2]
    with pytest.raises(ConfigError, match=r"theta0\[1\]"):
        resolve("integrate", {"theta0": [0.2, 1.2]})


def test_load_config_schema(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"alpha": 0.5}))
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(p)
    p.write_text(json.dumps({"schema_version": 1, "command": "integrate", "alpha": 0.5}))
    assert load_config(p) == ("integrate", {"alpha": 0.5})


# -- trajectory files ---------------------------------------------------------------

def test_trajectory_roundtrip(tmp_path):
    traj = Trajectory(np.array([0.0, 0.1, 0.25]), np.array([[0.7, 0.6], [1 / 3, 0.2], [0, 1]]),
                      {"kind": "mean-field", "n": 3})
    save_trajectory(traj, tmp_path / "a.csv")
    back = load_trajectory(tmp_path / "a.csv")
    assert np.array_equal(back.t, traj.t) and np.array_equal(back.theta, traj.theta)
    assert back.meta == traj.meta
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,theta_b,theta_r"


@pytest.mark.parametrize("text, line", [
    ("x,y,z\n0,0,0\n", 1),
    ("t,theta_b,theta_r\n0,0.5\n", 2),
    ("t,theta_b,theta_r\n0,0.5,0.5\n0,0.5,0.5\n", 3),
    ("t,theta_b,theta_r\n0,a,0.5\n", 2),
])
def test_trajectory_format_errors(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(TrajectoryFormatError) as exc:
        load_trajectory(p)
    assert exc.value.line == line


# -- commands ----------------------------------------------------------------------

def test_classify_json(capsys):
    code, out, _ = call(capsys, "classify", "--alpha", "0.8", "--beta", "0.7", "--r", "0.65",
                        "--rho", "0.5")
    assert code == 0
    assert '"regime":"Case2"' in out
    doc = json.loads(out)
    assert doc["predicted_limit"] == [0.0, 1.0]


def test_classify_rejects_inertia(capsys):
    code, _, err = call(capsys, "classify", "--delta", "0.1")
    assert code == 1 and "zero inertia" in err


def test_integrate_case4_csv(capsys, outdir):
    code, out, _ = call(capsys, "integrate", "--alpha", "0.2", "--beta", "0.8", "--r", "0.5",
                        "--theta0", "0.7", "0.7", "--out", str(outdir / "mf"))
    assert code == 0
    data = read_csv(outdir / "mf" / "trajectory.csv")
    assert tuple(data[-1, 1:]) == (0.5, 0.5)
    for name in ("trajectory.json", "meta.json", "trajectory.svg"):
        assert (outdir / "mf" / name).exists()


def test_default_outdir_from_env(capsys, outdir):
    code, _, _ = call(capsys, "integrate", "--horizon", "1")
    assert code == 0
    assert (outdir / "default" / "integrate" / "trajectory.csv").exists()


def test_compare_identical(capsys, outdir):
    call(capsys, "integrate", "--out", str(outdir / "a"))
    code, out, _ = call(capsys, "compare", str(outdir / "a" / "trajectory.csv"),
                        str(outdir / "a" / "trajectory.csv"))
    assert code == 0 and out.strip() == "0.0"


def test_compare_malformed_is_data_error(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,theta_b,theta_r\n0,oops,1\n")
    code, _, err = call(capsys, "compare", str(bad), str(bad))
    assert code == 2 and "bad.csv:2" in err


def test_consensus_check(capsys):
    code, out, _ = call(capsys, "consensus-check", "--alpha", "0.8", "--beta", "0.7",
                        "--r", "0.5", "--theta0", "0.61", "0.6")
    assert code == 0 and json.loads(out)["consensus"] is True
    code, _, err = call(capsys, "consensus-check", "--theta0", "0.5", "0.7")
    assert code == 1 and "degenerate" in err


def test_usage_errors(capsys):
    assert call(capsys, "frobnicate")[0] == 1
    assert call(capsys, "classify", "--no-such-flag")[0] == 1
    code, _, err = call(capsys, "simulate", "--alpha", "1.5")
    assert code == 1 and "alpha" in err and "[0, 1]" in err
    assert call(capsys)[0] == 1


def test_config_file_alpha_out_of_range(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"schema_version": 1, "alpha": 1.5}))
    code, _, err = call(capsys, "integrate", "--config", str(p))
    assert code == 1 and "alpha: 1.5 outside legal range [0, 1]" in err


def test_config_invalid_json_is_data_error(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    assert call(capsys, "integrate", "--config", str(p))[0] == 2


def test_flag_overrides_config_seed(capsys, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"schema_version": 1, "seed": 7, "n": 200}))
    out = tmp_path / "run"
    code, _, _ = call(capsys, "simulate", "--config", str(p), "--seed", "42", "--out", str(out))
    assert code == 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["config"]["seed"] == 42 and meta["config"]["n"] == 200
    assert meta["version"] and meta["derived_seeds"]["graph_seed"]


@pytest.mark.parametrize("argv, files", [
    (["simulate", "--n", "300", "--seed", "3", "--topology", "sbm", "--rho", "0.6"],
     ["trajectory.csv"]),
    (["simulate", "--n", "200", "--reps", "3", "--seed", "5"], ["ensemble.csv", "endpoints.csv"]),
    (["integrate", "--alpha", "0.8", "--beta", "0.7", "--r", "0.65", "--theta0", "0.68", "0.6"],
     ["trajectory.csv"]),
    (["sweep", "--axis", "alpha:0.1:1:4", "--axis", "red_fraction:0.2:0.8:3", "--mode",
      "integrate"], ["sweep.csv"]),
    (["sweep", "--kind", "homophily", "--mode", "integrate", "--r", "0.65"], ["scan.csv"]),
    (["scenario", "majority-flip", "--n", "500"], ["main_mean_field.csv", "main_stochastic.csv"]),
    (["gen-graph", "--kind", "sbm", "--n-blue", "30", "--n-red", "20", "--rho", "0.7",
      "--seed", "9"], ["edges.txt", "parties.txt"]),
])
def test_rerun_from_meta_is_byte_identical(capsys, tmp_path, argv, files):
    first, second = tmp_path / "first", tmp_path / "second"
    assert call(capsys, *argv, "--out", str(first))[0] == 0
    code, _, err = call(capsys, argv[0], "--config", str(first / "meta.json"),
                        "--out", str(second))
    assert code == 0, err
    for name in files:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_config_command_mismatch(capsys, tmp_path):
    call(capsys, "integrate", "--out", str(tmp_path / "a"))
    code, _, err = call(capsys, "simulate", "--config", str(tmp_path / "a" / "meta.json"))
    assert code == 1 and "integrate" in err


def test_graph_commands(capsys, tmp_path):
    out = tmp_path / "g"
    assert call(capsys, "gen-graph", "--kind", "sbm", "--n-blue", "100", "--n-red", "100",
                "--rho", "0.7", "--seed", "1", "--out", str(out))[0] == 0
    code, text, _ = call(capsys, "inspect-graph", "--edges", str(out / "edges.txt"),
                         "--parties", str(out / "parties.txt"))
    stats = json.loads(text)
    assert code == 0 and stats["n"] == 200
    assert stats["homophily_estimate"] == pytest.approx(0.7, abs=0.05)
    # simulate on the loaded files
    code, text, _ = call(capsys, "simulate", "--edges", str(out / "edges.txt"),
                         "--parties", str(out / "parties.txt"), "--out", str(tmp_path / "s"))
    assert code == 0 and json.loads(text)["n"] == 200


def test_inspect_graph_bad_file(capsys, tmp_path):
    (tmp_path / "e.txt").write_text("0 1\n1 7\n")
    (tmp_path / "p.txt").write_text("0 0\n1 1\n")
    code, _, err = call(capsys, "inspect-graph", "--edges", str(tmp_path / "e.txt"),
                        "--parties", str(tmp_path / "p.txt"))
    assert code == 2 and "e.txt:2" in err and "dangling" in err


def test_scenario_list_and_unknown(capsys):
    code, out, _ = call(capsys, "scenario", "--list")
    assert code == 0 and "tipping-minority-flip" in out.split()
    assert call(capsys, "scenario", "nope")[0] == 1


def test_sweep_heatmap_written(capsys, tmp_path):
    out = tmp_path / "sw"
    code, text, _ = call(capsys, "sweep", "--axis", "alpha:0.05:1:6", "--axis",
                         "red_fraction:0.1:0.9:6", "--beta", "0.5", "--out", str(out))
    assert code == 0
    assert (out / "heatmap.svg").read_text().startswith("<svg")
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "alpha,red_fraction,regime,endpoint_b,endpoint_r,seed,error"
    assert len(rows) == 37


def test_help_per_subcommand(capsys):
    for cmd in ("simulate", "integrate", "sweep", "compare"):
        code, out, _ = call(capsys, cmd, "--help")
        assert code == 0 and "usage" in out
