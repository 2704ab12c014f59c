import csv
import json

import numpy as np
import pytest

from wcmdp.harness import ConfigError, ExperimentConfig, cell_seed, reproduce, run_sweep


def small(tmp_path, **kw):
    base = dict(model="nonindexable", policies=[{"type": "fluid", "pi": "auto"},
                                                {"type": "priority", "order": "lp"},
                                                {"type": "id"}],
                n_list=[20, 40], horizon=120, replications=3, seed=5,
                output_dir=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentConfig(**base)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("kw, msg", [
    ({"policies": []}, "empty"),
    ({"n_list": []}, "empty"),
    ({"n_list": [40, 20]}, "increasing"),
    ({"policies": [{"type": "whittle"}]}, "unknown"),
    ({"policies": [{"type": "priority"}]}, "order"),
    ({"policies": [{"type": "priority", "order": [0, 0, 1]}]}, "permutation"),
    ({"burn_in": 500}, "burn_in"),
])
def test_invalid_configs(tmp_path, kw, msg):
    with pytest.raises(ConfigError, match=msg):
        run_sweep(small(tmp_path, **kw))


def test_policy_must_fit_model(tmp_path):
    with pytest.raises(ConfigError, match="restless bandit"):
        run_sweep(small(tmp_path, model="taxi", policies=[{"type": "id"}]))


def test_unknown_model(tmp_path):
    with pytest.raises(ConfigError, match="neither"):
        run_sweep(small(tmp_path, model="no_such_model"))


def test_sweep_outputs(tmp_path):
    res = run_sweep(small(tmp_path))
    rows = read_rows(res.results_path)
    assert list(rows[0]) == ["model", "policy", "n", "replication", "gain"]
    assert len(rows) == 3 * 2 * 3
    summary = json.loads(res.summary_path.read_text())
    assert summary["pi_choice"] == "mu"
    assert summary["lp_priority_order"] == [0, 1, 2]
    g_r = summary["g_r"]
    for cell in summary["cells"]:
        gains = [float(r["gain"]) for r in rows
                 if r["policy"] == cell["policy"] and int(r["n"]) == cell["n"]]
        mean = float(np.mean(gains))
        assert cell["gain_mean"] == pytest.approx(mean, abs=1e-15)
        assert abs(cell["gap"] - (g_r - mean) / g_r) <= 1e-12


def test_byte_identical_rerun_and_workers(tmp_path):
    a = run_sweep(small(tmp_path, output_dir=str(tmp_path / "a")))
    b = run_sweep(small(tmp_path, output_dir=str(tmp_path / "b"), workers=3))
    assert a.results_path.read_bytes() == b.results_path.read_bytes()


def test_condition_failure_keeps_baselines(tmp_path):
    cfg = small(tmp_path, model="two_state_toy",
                policies=[{"type": "fluid"}, {"type": "priority", "order": [1, 0]}])
    res = run_sweep(cfg)
    assert "fluid_error" in res.summary
    assert res.summary["condition"]["mu"]["holds"] is False
    assert {c["policy"] for c in res.summary["cells"]} == {"priority[1-0]"}


def test_common_random_numbers():
    assert cell_seed(1, 20) == cell_seed(1, 20)
    assert cell_seed(1, 20) != cell_seed(1, 40)


def test_config_json_round_trip(tmp_path):
    cfg = small(tmp_path)
    path = tmp_path / "exp.json"
    doc = cfg.to_dict()
    doc["n"] = doc.pop("n_list")
    path.write_text(json.dumps(doc))
    assert ExperimentConfig.load(path) == cfg
    path.write_text(json.dumps({"model": "taxi", "policies": [], "bogus": 1}))
    with pytest.raises(ConfigError, match="bogus"):
        ExperimentConfig.load(path)


def test_presets():
    fig1 = reproduce("fig1")
    assert fig1.model == "taxi" and fig1.initial == 0
    assert fig1.n_list == [10, 20, 50, 100, 200, 500, 1000, 2000]
    right = reproduce("fig2_right")
    assert right.model == "attractor_fail"
    assert [p["type"] for p in right.policies] == ["fluid", "priority"]
    assert reproduce("fig2_left").model == "nonindexable"
    with pytest.raises(ConfigError, match="fig1, fig2_left, fig2_right"):
        reproduce("fig9")


def test_taxi_gap_trend(tmp_path):
    cfg = ExperimentConfig(model="taxi", policies=[{"type": "fluid"}], n_list=[50, 200, 1000],
                           horizon=2000, replications=2, seed=0, output_dir=str(tmp_path))
    gaps = [c["gap"] for c in run_sweep(cfg).summary["cells"]]
    assert gaps[0] > gaps[1] > gaps[2] > 0
