"""Harness commands and CLI surface: files, exit codes, reproducibility."""

import json
import math

import numpy as np
import pytest

from gesturelab import cli, harness
from gesturelab.actions import ActionType
from gesturelab.datasetgen import load_dataset
from gesturelab.exceptions import NoConfidentIntent, SchemaMismatch, TooFewRecords
from gesturelab.gestures import load_library
from gesturelab.vmlp import VariationalMLPClassifier

# deliberately tiny training budget: these tests exercise plumbing, not
# accuracy, so every cell runs in roughly a second
SMALL = dict(train_size=250, test_size=80, epochs=800)


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("models") / "m1_d1"
    harness.cmd_train(level="D1", model="M1", seed=0, out=out, **SMALL)
    return out


# ------------------------------------------------------------------- generate


def test_generate_round_trip(tmp_path, capsys):
    out = tmp_path / "d2.jsonl"
    harness.cmd_generate("D2", 40, 11, out)
    printed = capsys.readouterr().out
    assert "40" in printed and "D2" in printed
    ds = load_dataset(out)
    assert len(ds) == 40 and ds.level == "D2" and ds.seed == 11
    assert ds.table_hash in printed

    again = tmp_path / "d2_again.jsonl"
    harness.cmd_generate("D2", 40, 11, again)
    assert out.read_bytes() == again.read_bytes()


def test_generate_worker_pool_is_content_neutral(tmp_path):
    a = tmp_path / "serial.jsonl"
    b = tmp_path / "pooled.jsonl"
    harness.cmd_generate("D1", 30, 5, a, workers=1)
    harness.cmd_generate("D1", 30, 5, b, workers=2)
    assert a.read_bytes() == b.read_bytes()


def test_generate_rejects_empty(tmp_path):
    with pytest.raises(TooFewRecords):
        harness.cmd_generate("D1", 0, 0, tmp_path / "none.jsonl")


# ----------------------------------------------------------------------- grid


def test_grid_shape_and_provenance(tmp_path):
    out = tmp_path / "grid.csv"
    harness.cmd_grid(
        models=["M1"], levels=["D1"], seeds=[0, 1], out=out, **SMALL
    )
    provenance, rows = harness.read_result_csv(out)
    assert provenance["kind"] == "grid"
    assert provenance["seeds"] == [0, 1]
    assert set(provenance["table_hash"]) == {"D1/0", "D1/1"}
    assert [r["seed"] for r in rows] == ["0", "1", "mean"]
    for r in rows:
        assert set(r) == {
            "model", "dataset", "seed", "balanced_accuracy", "joint_accuracy", "wall_time",
        }
        assert 0.0 <= float(r["balanced_accuracy"]) <= 1.0
    seed_rows = [float(r["balanced_accuracy"]) for r in rows[:2]]
    assert float(rows[2]["balanced_accuracy"]) == pytest.approx(
        np.mean(seed_rows), abs=1e-6
    )


def test_grid_cell_failure_does_not_abort(tmp_path, monkeypatch, capsys):
    real = harness._run_cell

    def flaky(model, *args, **kwargs):
        if model == "M2":
            raise RuntimeError("boom")
        return real(model, *args, **kwargs)

    monkeypatch.setattr(harness, "_run_cell", flaky)
    out = tmp_path / "grid.csv"
    harness.cmd_grid(models=["M1", "M2"], levels=["D1"], seeds=[0], out=out, **SMALL)
    _, rows = harness.read_result_csv(out)
    by_model = {(r["model"], r["seed"]): r for r in rows}
    assert math.isnan(float(by_model[("M2", "0")]["balanced_accuracy"]))
    assert float(by_model[("M1", "0")]["balanced_accuracy"]) > 0.5
    assert "failed: RuntimeError: boom" in capsys.readouterr().out


def test_grid_validates_axes(tmp_path):
    with pytest.raises(ValueError):
        harness.cmd_grid(models=["M9"], levels=["D1"], seeds=[0], out=tmp_path / "g.csv")
    with pytest.raises(ValueError):
        harness.cmd_grid(models=[], levels=["D1"], seeds=[0], out=tmp_path / "g.csv")


# ---------------------------------------------------------------------- curve


def test_curve_shape_and_shared_test_set(tmp_path):
    out = tmp_path / "curve.csv"
    harness.cmd_learning_curve(
        counts=[50, 100], seeds=[0], test_size=60, epochs=600, out=out
    )
    provenance, rows = harness.read_result_csv(out)
    assert provenance["kind"] == "learning_curve"
    assert provenance["model"] == "M5" and provenance["level"] == "D4"
    assert [(r["count"], r["seed"]) for r in rows] == [
        ("50", "0"), ("100", "0"), ("50", "mean"), ("100", "mean"),
    ]


def test_curve_rejects_zero_count(tmp_path):
    with pytest.raises(TooFewRecords):
        harness.cmd_learning_curve(counts=[0, 100], seeds=[0], out=tmp_path / "c.csv")


def test_read_result_csv_requires_provenance(tmp_path):
    p = tmp_path / "naked.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(SchemaMismatch):
        harness.read_result_csv(p)


# ---------------------------------------------------------------------- train


def test_train_writes_model_directory(model_dir):
    for name in (
        "action_head.json",
        "object_head.json",
        "library.json",
        "train_log_action.csv",
        "train_log_object.csv",
        "metrics.json",
    ):
        assert (model_dir / name).exists(), name

    metrics = json.loads((model_dir / "metrics.json").read_text())
    prov = metrics["provenance"]
    assert prov["model"] == "M1" and prov["level"] == "D1" and prov["seed"] == 0
    assert "table_hash" in prov
    assert 0.0 <= metrics["balanced_accuracy"] <= 1.0

    log = (model_dir / "train_log_action.csv").read_text().splitlines()
    assert log[0] == "epoch,elbo,heldout_balanced_accuracy"
    assert len(log) > 1

    head = VariationalMLPClassifier.load(model_dir / "action_head.json")
    proba = head.predict_proba(np.zeros((1, head.n_features_in_)))
    assert proba.shape[1] == len(head.classes_)
    lib = load_library(model_dir / "library.json")
    assert len(lib) == 9


# -------------------------------------------------------------------- episode


def test_episode_synthetic_point_swipe_down(model_dir, tmp_path):
    out = tmp_path / "ep"
    result = harness.cmd_episode(
        models=model_dir,
        gestures=["point", "swipe_down"],
        seed=3,
        scene_seed=5,
        out=out,
    )
    vec = np.asarray(result["gesture_vector"])
    top2 = set(np.argsort(vec)[-2:])
    assert top2 == {2, 6}  # point, swipe_down in library order
    assert vec[2] >= 0.9 and vec[6] >= 0.9
    assert result["intent"]["ta"] in [int(t) for t in ActionType]
    assert result["plan"], "a plan should have been expanded"
    assert (out / "episode.json").exists()
    assert (out / "trace.csv").exists()
    assert (out / "replay.jsonl").exists()
    doc = json.loads((out / "episode.json").read_text())
    assert doc["provenance"]["source"] == "synthetic:point,swipe_down"


def test_episode_replay_file_round_trip(model_dir, tmp_path):
    from gesturelab.gestures import make_replay, save_replay

    path = tmp_path / "replay.jsonl"
    save_replay(path, make_replay(["point", "swipe_down"], seed=3))
    result = harness.cmd_episode(models=model_dir, replay=path, scene_seed=5)
    vec = np.asarray(result["gesture_vector"])
    assert set(np.argsort(vec)[-2:]) == {2, 6}


def test_episode_auto_opens_closed_drawer(model_dir):
    """Scene 9's only drawer is closed and the gripper holds a cup: a pinch
    must infer put_into and the plan must begin by opening the drawer."""
    result = harness.cmd_episode(
        models=model_dir, gestures=["pinch"], seed=1, scene_seed=9, target=1
    )
    assert result["intent"]["ta"] == int(ActionType.PUT_INTO)
    assert result["intent"]["to"] == 1
    assert result["plan"][0]["primitive"] == "open_drawer"
    assert any("state 0->1" in line for line in result["scene_diff"])


def test_episode_empty_replay_is_not_confident(model_dir, tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(NoConfidentIntent):
        harness.cmd_episode(models=model_dir, replay=empty, scene_seed=9)


def test_episode_requires_a_source(model_dir):
    with pytest.raises(ValueError):
        harness.cmd_episode(models=model_dir, gestures=[])


# ------------------------------------------------------------------ cli layer


def test_cli_exit_codes(tmp_path, model_dir):
    ok = cli.main(
        ["generate", "--level", "D1", "--n", "5", "--seed", "1",
         "--out", str(tmp_path / "d.jsonl")]
    )
    assert ok == 0
    assert cli.main(["no-such-command"]) == 1
    assert cli.main(["generate", "--level", "D9", "--n", "5"]) == 1
    assert cli.main(
        ["generate", "--level", "D1", "--n", "0", "--out", str(tmp_path / "x.jsonl")]
    ) == 2
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert cli.main(
        ["episode", "--models", str(model_dir), "--replay", str(empty)]
    ) == 2
    assert cli.main(["--help"]) == 0


def test_cli_episode_flag_parsing(model_dir, tmp_path):
    code = cli.main(
        ["episode", "--models", str(model_dir), "--gestures", "pinch",
         "--seed", "1", "--scene-seed", "9", "--target", "1",
         "--out", str(tmp_path / "ep")]
    )
    assert code == 0
    doc = json.loads((tmp_path / "ep" / "episode.json").read_text())
    assert doc["plan"][0]["primitive"] == "open_drawer"


def test_global_seed_resolution(monkeypatch):
    monkeypatch.delenv("GIL_SEED", raising=False)
    assert harness.global_seed(None) == 0
    assert harness.global_seed(7) == 7
    monkeypatch.setenv("GIL_SEED", "42")
    assert harness.global_seed(None) == 42
    assert harness.global_seed(7) == 7
    assert cli._parse_seeds(None, (0, 1, 2)) == [42]
    monkeypatch.delenv("GIL_SEED")
    assert cli._parse_seeds(None, (0, 1, 2)) == [0, 1, 2]
    assert cli._parse_seeds("3,4", (0,)) == [3, 4]
    monkeypatch.setenv("GIL_SEED", "pony")
    with pytest.raises(ValueError):
        harness.global_seed(None)


def test_mean_rows_skip_failed_cells():
    rows = [
        {"model": "M1", "dataset": "D1", "seed": 0, "balanced_accuracy": 0.8},
        {"model": "M1", "dataset": "D1", "seed": 1, "balanced_accuracy": float("nan")},
        {"model": "M1", "dataset": "D1", "seed": 2, "balanced_accuracy": 0.6},
    ]
    means = harness._mean_rows(rows, ("model", "dataset"), ("balanced_accuracy",))
    assert len(means) == 1
    assert means[0]["balanced_accuracy"] == pytest.approx(0.7)
    assert means[0]["seed"] == "mean"
