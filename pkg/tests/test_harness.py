import json
import os
import subprocess
import sys

import numpy as np
import pytest

import hawksteer as hs
from hawksteer.experiment import ConfigError, ExperimentConfig, run_experiment
from hawksteer.io import read_csv_records, read_events_jsonl


def broadcaster_config(out=None, policy=None, replicas=3, seed=11):
    return {
        "seed": seed,
        "horizon": {"t0": 0.0, "tf": 20.0},
        "replicas": replicas,
        "network": {"kind": "followers", "count": 1,
                    "feed": {"kind": "hawkes", "gamma0": 10.0, "alpha": 1.0,
                             "omega": 10.0}},
        "dynamics": {},
        "policy": policy or {"kind": "redqueen", "q": 2.0},
        "out": out,
    }


def network_config(out=None, policy=None, replicas=2, seed=12):
    return {
        "seed": seed,
        "horizon": {"t0": 0.0, "tf": 4.0},
        "replicas": replicas,
        "network": {"kind": "kronecker", "seed_matrix": [[0.9, 0.4], [0.4, 0.9]],
                    "k": 4},
        "dynamics": {"omega": 4.0,
                     "lam0": {"kind": "uniform", "low": 0.0, "high": 1.0},
                     "influence": {"kind": "uniform", "low": 0.0, "high": 1.0}},
        "policy": policy or {"kind": "none"},
        "out": out,
        "milestone": 10,
    }


def test_config_validation_lists_paths():
    with pytest.raises(ConfigError) as err:
        ExperimentConfig.from_dict({"seed": -1, "horizon": {}, "network": {},
                                    "policy": {}})
    msg = str(err.value)
    assert "seed" in msg and "horizon.tf" in msg
    assert "network.kind" in msg and "policy.kind" in msg


def test_config_policy_network_mismatch():
    cfg = network_config(policy={"kind": "redqueen", "q": 1.0})
    with pytest.raises(ConfigError, match="followers"):
        ExperimentConfig.from_dict(cfg)


def test_config_requires_exactly_one_budget_or_q():
    cfg = broadcaster_config(policy={"kind": "redqueen", "q": 1.0, "budget": 5})
    with pytest.raises(ConfigError, match="exactly one"):
        ExperimentConfig.from_dict(cfg)


def test_uncontrolled_network_run_counts():
    cfg = ExperimentConfig.from_dict(network_config())
    result = run_experiment(cfg)
    assert len(result.rows) == 2
    for row in result.rows:
        assert row.incentivized_count == 0
        assert row.organic_count > 0
    assert result.aggregates[0]["replicas"] == 2


def test_run_experiment_rerun_is_byte_identical(tmp_path):
    out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
    for out in (out1, out2):
        cfg = ExperimentConfig.from_dict(network_config(out=out))
        run_experiment(cfg)
    for name in ("metrics.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    logs1 = sorted((tmp_path / "a" / "events" / "none").iterdir())
    logs2 = sorted((tmp_path / "b" / "events" / "none").iterdir())
    assert [p.name for p in logs1] == [p.name for p in logs2]
    for p1, p2 in zip(logs1, logs2):
        assert p1.read_bytes() == p2.read_bytes()


def test_broadcaster_run_and_feed_coupling(tmp_path):
    """Two policies under the same seed consume identical feed streams."""
    out_rq = str(tmp_path / "rq")
    out_un = str(tmp_path / "un")
    rq = run_experiment(ExperimentConfig.from_dict(
        broadcaster_config(out=out_rq, policy={"kind": "redqueen", "q": 2.0})))
    un = run_experiment(ExperimentConfig.from_dict(
        broadcaster_config(out=out_un, policy={"kind": "uniform", "budget": 20})))
    for r in range(3):
        assert rq.feed_logs[r] == un.feed_logs[r]
    for row in un.rows:
        assert row.incentivized_count == 20
    assert all(row.position_over_time > 0 for row in rq.rows)


def test_oracle_policy_through_harness():
    cfg = ExperimentConfig.from_dict(
        broadcaster_config(policy={"kind": "oracle", "q": 2.0}))
    result = run_experiment(cfg)
    assert all(row.incentivized_count > 0 for row in result.rows)


def test_in_run_metrics_match_independent_rereader(tmp_path):
    """Metrics recomputed from the written logs equal the in-run rows."""
    out = str(tmp_path / "run")
    cfg = ExperimentConfig.from_dict(
        broadcaster_config(out=out, policy={"kind": "redqueen", "q": 2.0}))
    result = run_experiment(cfg)
    for r in range(cfg.replicas):
        feed = read_events_jsonl(os.path.join(out, "feeds", f"replica_{r:04d}.jsonl"))
        posts = read_events_jsonl(os.path.join(out, "posts", "redqueen",
                                               f"replica_{r:04d}.jsonl"), m=1)
        traj = hs.build_rank_trajectory(feed.times, feed.dims, posts.times,
                                        feed.m, cfg.t0, cfg.tf)
        row = result.rows[r]
        assert hs.position_over_time(traj, cfg.t0, cfg.tf) == row.position_over_time
        assert hs.time_at_top(traj, cfg.t0, cfg.tf) == row.time_at_top
        assert len(feed) == row.organic_count
        assert len(posts) == row.incentivized_count


def test_network_rereader_counts(tmp_path):
    out = str(tmp_path / "net")
    cfg = ExperimentConfig.from_dict(network_config(out=out))
    result = run_experiment(cfg)
    for r in range(cfg.replicas):
        seq = read_events_jsonl(os.path.join(out, "events", "none",
                                             f"replica_{r:04d}.jsonl"))
        row = result.rows[r]
        assert len(seq.subset("organic")) == row.organic_count
        assert len(seq.subset("incentivized")) == row.incentivized_count
        if row.milestone_time is not None:
            organic = seq.subset("organic")
            assert organic.times[cfg.milestone - 1] == row.milestone_time


def test_manifest_written(tmp_path):
    out = str(tmp_path / "m")
    cfg = ExperimentConfig.from_dict(network_config(out=out))
    run_experiment(cfg)
    manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert manifest["seed"] == 12
    assert manifest["policy"] == "none"
    assert len(manifest["config_sha256"]) == 64


def run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "hawksteer", *args],
                          capture_output=True, text=True, cwd=cwd)


def test_cli_kronecker_and_simulate_and_fit(tmp_path):
    out = str(tmp_path)
    res = run_cli(["kronecker", "--seed-matrix", "0.9,0.4,0.4,0.9", "--k", "4",
                   "--seed", "3", "--out", out], cwd=out)
    assert res.returncode == 0, res.stderr
    graph = os.path.join(out, "graph.txt")
    adj, _ = hs.load_edges(graph)
    assert adj.n == 16

    # weight the graph so simulate can run from it
    infl = hs.random_influence(adj, 0.0, 1.0, hs.stream(4, "w"))
    hs.save_edges(graph, adj, infl)
    res = run_cli(["simulate", "--graph", graph, "--omega", "4.0", "--lam0", "0.5",
                   "--tf", "30.0", "--seed", "5", "--out", out], cwd=out)
    assert res.returncode == 0, res.stderr
    events = read_events_jsonl(os.path.join(out, "events.jsonl"))
    assert len(events) > 50

    res = run_cli(["fit", "--events", os.path.join(out, "events.jsonl"),
                   "--omega", "4.0", "--support", graph, "--max-iters", "60",
                   "--out", out], cwd=out)
    assert res.returncode == 0, res.stderr
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert np.isfinite(fit["loglik"])


def test_cli_redqueen_oracle_metrics_round_trip(tmp_path):
    out = str(tmp_path)
    feed = hs.simulate_uncontrolled([[1.0]], [10.0], 10.0, 0.0, 20.0,
                                    hs.stream(6, "feed"))
    from hawksteer.io import write_events_jsonl

    feeds_path = os.path.join(out, "feeds.jsonl")
    write_events_jsonl(feeds_path, feed)

    res = run_cli(["redqueen", "--feeds", feeds_path, "--q", "2.0",
                   "--tf", "20.0", "--seed", "7", "--out", out], cwd=out)
    assert res.returncode == 0, res.stderr
    posts_path = os.path.join(out, "posts.jsonl")
    assert os.path.exists(posts_path)
    metrics = read_csv_records(os.path.join(out, "metrics.csv"))
    assert metrics[0]["policy"] == "redqueen"

    res = run_cli(["metrics", "--feeds", feeds_path, "--posts", posts_path,
                   "--policy", "redqueen", "--tf", "20.0", "--out",
                   os.path.join(out, "re")], cwd=out)
    assert res.returncode == 0, res.stderr
    re_metrics = read_csv_records(os.path.join(out, "re", "metrics.csv"))
    assert re_metrics[0]["position_over_time"] == metrics[0]["position_over_time"]
    assert re_metrics[0]["time_at_top"] == metrics[0]["time_at_top"]

    res = run_cli(["oracle", "--feeds", feeds_path, "--q", "2.0", "--tf", "20.0",
                   "--out", os.path.join(out, "orc")], cwd=out)
    assert res.returncode == 0, res.stderr


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path)
    # config error: redqueen without q or budget
    feed_path = os.path.join(out, "f.jsonl")
    from hawksteer.io import write_events_jsonl

    write_events_jsonl(feed_path, hs.EventSeq(1, [1.0], [0]))
    res = run_cli(["redqueen", "--feeds", feed_path, "--tf", "5.0", "--out", out],
                  cwd=out)
    assert res.returncode == 2
    # numerical failure: a Riccati escape surfaces as exit code 3
    graph = os.path.join(out, "g.txt")
    with open(graph, "w") as fh:
        fh.write("0 1 5.0\n1 0 5.0\n")
    res = run_cli(["cheshire", "--graph", graph, "--omega", "1.0", "--qf", "50.0",
                   "--tf", "10.0", "--seed", "1", "--out", out], cwd=out)
    assert res.returncode == 3, (res.returncode, res.stderr)


def test_cli_full_config_run(tmp_path):
    out = str(tmp_path / "cfg_run")
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(network_config()))
    res = run_cli(["simulate", "--config", str(cfg_path), "--out", out],
                  cwd=str(tmp_path))
    assert res.returncode == 0, res.stderr
    assert os.path.exists(os.path.join(out, "metrics.csv"))
