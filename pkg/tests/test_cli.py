import json
import subprocess
import sys

import numpy as np
import pytest

from wcmdp.cli import main
from wcmdp.model import ModelSpec, dump_model


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_solve(capsys):
    code, out = run(capsys, "solve", "nonindexable")
    assert code == 0
    assert out["g_r"] == pytest.approx(0.34374, abs=1e-5)
    assert set(out) >= {"y_star", "x_star", "support", "ineq_slack", "eq_residual"}


def test_solve_infeasible_exit_3(tmp_path, capsys):
    spec = ModelSpec.create(np.stack([np.eye(2)]), np.zeros((1, 2)), C=np.ones((1, 2, 1)), d=[2.0])
    path = tmp_path / "inf.json"
    dump_model(spec, path)
    code, out = run(capsys, "solve", str(path))
    assert code == 3 and out["status"] == "infeasible"
    assert run(capsys, "simulate", str(path), "--n", "5")[0] == 3


def test_invalid_model_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"num_states": 2, "num_actions": 1, "transitions": [[[0.5, 0.4], [0, 1]]],'
                    ' "rewards": [[0, 0]]}')
    assert run(capsys, "solve", str(path))[0] == 2
    assert run(capsys, "solve", str(tmp_path / "missing.json"))[0] == 2


def test_example_emit_and_fluid_check(tmp_path, capsys):
    path = tmp_path / "taxi.json"
    code, _ = run(capsys, "example", "taxi", "--emit", str(path))
    assert code == 0 and path.exists()
    code, out = run(capsys, "fluid-check", str(path), "--policy", "mu", "--samples", "5")
    assert code == 0
    assert out["condition"]["holds"]
    assert out["convergence"]["converged"] == out["convergence"]["initial_conditions"]


def test_simulate_with_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    code, out = run(capsys, "simulate", "attractor_fail", "--policy", "priority:2,0,1", "--n", "10",
                    "--t", "20", "--reps", "2", "--seed", "3", "--trace", str(trace))
    assert code == 0
    assert out["policy"] == "priority[2-0-1]"
    lines = trace.read_text().splitlines()
    assert lines[0] == "t,state,frequency"
    assert len(lines) == 1 + 21 * 3
    code, out = run(capsys, "simulate", "nonindexable", "--policy", "id", "--n", "10", "--t", "20")
    assert code == 0 and out["metadata"]["mode"] == "agent"


def test_simulate_bad_policy(capsys):
    assert run(capsys, "simulate", "taxi", "--policy", "nope", "--n", "5")[0] == 2
    assert run(capsys, "simulate", "two_state_toy", "--n", "4")[0] == 2


def test_sweep_and_reproduce(tmp_path, capsys):
    cfg = {"model": "nonindexable", "policies": [{"type": "fluid"}], "n": [10, 20],
           "horizon": 50, "replications": 2, "output_dir": str(tmp_path / "sw")}
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    code, out = run(capsys, "sweep", str(path))
    assert code == 0 and len(out["cells"]) == 2
    assert (tmp_path / "sw" / "results.csv").exists()
    path.write_text(json.dumps({**cfg, "policies": []}))
    assert run(capsys, "sweep", str(path))[0] == 2
    code, out = run(capsys, "reproduce", "fig2_right", "--out", str(tmp_path / "r"), "--dry-run")
    assert code == 0 and out["model"] == "attractor_fail"


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wcmdp.cli", "reproduce", "bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "fig2_left" in proc.stderr
