import csv
import json

import pytest

from gflowgnn import cli
from gflowgnn import env as envlib
from gflowgnn.config import load_config

TOY = cli.DATA_DIR / "toy"


@pytest.fixture
def quick_config(tmp_path):
    """Bundled toy instance with a short training schedule."""
    data = json.loads((TOY / "config.json").read_text())
    for key in ("edges", "features", "labels", "splits"):
        data[key] = str(TOY / data[key])
    data.update(epochs=4, batch_size=4, max_epochs=30, patience=5)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


@pytest.fixture
def trained(quick_config, tmp_path):
    out = tmp_path / "train"
    assert cli.main(["train", "--config", str(quick_config), "--out", str(out)]) == 0
    return out


def test_train_writes_outputs(trained):
    assert sorted(p.name for p in trained.iterdir()) == [
        "curves.csv", "policy.ckpt", "resolved_config.json", "train_log.jsonl"]
    assert len(trained.joinpath("train_log.jsonl").read_text().splitlines()) == 4


def test_resolved_config_replays(trained, tmp_path):
    snap = trained / "resolved_config.json"
    cfg = load_config(snap)
    assert cfg.budget == 2 and cfg.epochs == 4
    out = tmp_path / "replay"
    assert cli.main(["train", "--config", str(snap), "--out", str(out)]) == 0
    assert (out / "train_log.jsonl").read_bytes() == (trained / "train_log.jsonl").read_bytes()


def test_seed_flag_overrides_env(quick_config, tmp_path, monkeypatch):
    monkeypatch.setenv("GFLOW_SEED", "5")
    out = tmp_path / "a"
    cli.main(["train", "--config", str(quick_config), "--out", str(out), "--seed", "9"])
    assert json.loads((out / "resolved_config.json").read_text())["seed"] == 9
    out = tmp_path / "b"
    cli.main(["train", "--config", str(quick_config), "--out", str(out)])
    assert json.loads((out / "resolved_config.json").read_text())["seed"] == 5


def test_missing_dataset_exit_2(tmp_path, capsys):
    (tmp_path / "c.json").write_text(json.dumps({"edges": "nope.txt", "features": "f.csv", "labels": "l.csv"}))
    assert cli.main(["train", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 2
    assert "not found" in capsys.readouterr().err


def test_bad_config_exit_2(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert cli.main(["train", "--config", str(tmp_path / "c.json")]) == 2
    (tmp_path / "d.json").write_text(json.dumps({"epochz": 3}))
    assert cli.main(["train", "--config", str(tmp_path / "d.json")]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_evaluate_and_greedy(trained, quick_config, tmp_path):
    args = ["evaluate", "--config", str(quick_config), "--checkpoint", str(trained / "policy.ckpt"), "--runs", "3"]
    assert cli.main(args + ["--out", str(tmp_path / "s")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "g"), "--greedy"]) == 0
    s = json.loads((tmp_path / "s" / "summary.json").read_text())
    g = json.loads((tmp_path / "g" / "summary.json").read_text())
    assert len(s["rewards"]) == 3
    assert (s["mode"], g["mode"]) == ("sampled", "greedy")
    assert (tmp_path / "s" / "eval_runs.csv").exists()


def test_evaluate_mlp_on_other_graph_exit_2(trained, tmp_path):
    assert cli.main(["generate-sbm", "--out", str(tmp_path / "g"), "--n", "30", "--classes", "2"]) == 0
    rc = cli.main(["evaluate", "--config", str(tmp_path / "g" / "config.json"),
                   "--checkpoint", str(trained / "policy.ckpt"), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_baseline_outputs(quick_config, tmp_path):
    out = tmp_path / "b"
    assert cli.main(["baseline", "random", "--config", str(quick_config), "--out", str(out), "--runs", "20"]) == 0
    rows = list(csv.DictReader(open(out / "baseline.csv")))
    assert len(rows) == 20 and len({r["seed"] for r in rows}) == 20
    out = tmp_path / "c"
    assert cli.main(["baseline", "centrality", "--config", str(quick_config), "--out", str(out), "--runs", "3"]) == 0
    rows = list(csv.DictReader(open(out / "baseline.csv")))
    assert len({r["label_set"] for r in rows}) == 1


def test_unknown_baseline_exit_2(quick_config, capsys):
    assert cli.main(["baseline", "age", "--config", str(quick_config)]) == 2
    assert "random, uncertainty, centrality, coreset" in capsys.readouterr().err


def test_proportionality_bounds(quick_config, tmp_path):
    out = str(tmp_path / "p")
    base = ["proportionality-check", "--config", str(quick_config), "--out", out, "--untrained"]
    assert cli.main(base + ["--tolerance", "0.01"]) == 1
    assert cli.main(base + ["--tolerance", "2.0"]) == 0
    report = json.loads((tmp_path / "p" / "proportionality.json").read_text())
    assert len(report["sets"]) == 15


def test_proportionality_rejects_large_instance(tmp_path):
    cli.main(["generate-sbm", "--out", str(tmp_path / "g"), "--n", "150"])
    rc = cli.main(["proportionality-check", "--config", str(tmp_path / "g" / "config.json"),
                   "--out", str(tmp_path / "o"), "--untrained"])
    assert rc == 2


def test_export_nodes(trained, quick_config, tmp_path):
    out = tmp_path / "n"
    assert cli.main(["export-nodes", "--config", str(quick_config), "--checkpoint", str(trained / "policy.ckpt"),
                     "--out", str(out), "--runs", "2"]) == 0
    sets = json.loads((out / "nodes.json").read_text())
    train_split = set(json.loads((TOY / "splits.json").read_text())["train"])
    assert len(sets) == 2
    for s in sets:
        assert len(s) == 2 and set(s) <= train_split


def test_builtin_config_resolves():
    assert cli.bundled_config("toy") == TOY / "config.json"
    assert load_config(cli.bundled_config("toy")).budget == 2


def test_training_abort_exit_3(quick_config, tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(envlib, "terminal_reward", lambda env: 0.0)
    data = json.loads(quick_config.read_text())
    data["eps_loss"] = 0.0
    quick_config.write_text(json.dumps(data))
    out = tmp_path / "abort"
    assert cli.main(["train", "--config", str(quick_config), "--out", str(out)]) == 3
    assert "abort_trajectory.jsonl" in capsys.readouterr().err
    assert (out / "abort_trajectory.jsonl").exists()
