import json

import numpy as np
import pytest

from hatekit import corpus, experiment
from hatekit.errors import ValidationError
from hatekit.losses import LossConfig


@pytest.fixture
def thread_file(tmp_path):
    trees = []
    for i in range(40):
        label = "HOF" if i % 2 else "NOT"
        marker = "marker1" if i % 2 else "marker0"
        clabel = "NOT" if i % 3 else "HOF"
        cmarker = "marker0" if i % 3 else "marker1"
        trees.append({
            "id": f"t{i}", "text": f"{marker} root {marker} w{i % 5}", "label": label,
            "comments": [
                {"id": f"t{i}c", "text": f"{cmarker} comment {cmarker} w{i % 3}",
                 "label": clabel,
                 "replies": [{"id": f"t{i}cr", "text": f"{marker} reply {marker}",
                              "label": label}]}
            ],
        })
    path = tmp_path / "threads.json"
    path.write_text(json.dumps(trees), encoding="utf-8")
    return path


def test_ichcl_thread_training_and_prediction(tmp_path, thread_file):
    cfg = {
        "task": "ichcl",
        "train_file": str(thread_file),
        "train": {"k_folds": 3, "learning_rate": 0.05, "batch_size": 16,
                  "max_epochs": 15, "patience": 4, "seed": 1},
    }
    resolved = experiment.resolve_config(cfg)
    run_dir = tmp_path / "run"
    metrics = experiment.run_train(resolved, run_dir)
    assert metrics["mean_accuracy"] >= 0.9
    assert metrics["task"] == "ichcl"

    probs, loaded = experiment.predict_run(run_dir, thread_file)
    assert len(probs) == 120  # every node gets a prediction
    assert loaded["task"] == "ichcl"
    for vec in probs.values():
        assert vec.sum() == pytest.approx(1.0, abs=1e-6)


def test_fine_label_focal_with_inverse_frequency_alpha(tmp_path):
    rows = []
    fine_counts = {"NONE": 40, "OFFN": 24, "HATE": 16, "PRFN": 12}
    i = 0
    for fine, n in fine_counts.items():
        coarse = "NOT" if fine == "NONE" else "HOF"
        for _ in range(n):
            rows.append(corpus.LabeledExample(
                id=f"x{i}", text=f"tag_{fine} word{i % 7} tag_{fine}",
                coarse_label=coarse, fine_label=fine, language="hi",
            ))
            i += 1
    data_path = tmp_path / "hi_b.csv"
    corpus.write_flat_dataset(data_path, rows)

    cfg = {
        "task": "hi_b",
        "train_file": str(data_path),
        "columns": {"id": "text_id", "text": "text", "coarse": "task_1", "fine": "task_2"},
        "feature_schema": [],
        "head": {"conv_widths": [3], "filters_per_width": 8, "fc_dim": 16, "dropout": 0.2},
        "train": {"k_folds": 4, "learning_rate": 0.02, "batch_size": 16,
                  "max_epochs": 15, "patience": 4, "seed": 2},
    }
    resolved = experiment.resolve_config(cfg)
    assert resolved["train"]["loss"]["kind"] == "focal"  # hi_b task default
    metrics = experiment.run_train(resolved, tmp_path / "run")
    assert metrics["mean_accuracy"] >= 0.9
    assert metrics["label_order"] == ["HATE", "OFFN", "PRFN", "NONE"]


def test_resolve_loss_inverse_frequency():
    rows = []
    i = 0
    for fine, n in (("HATE", 30), ("OFFN", 20), ("PRFN", 5), ("NONE", 45)):
        coarse = "NOT" if fine == "NONE" else "HOF"
        for _ in range(n):
            rows.append(corpus.LabeledExample(
                id=f"r{i}", text="t", coarse_label=coarse, fine_label=fine))
            i += 1
    task = experiment.TASKS["hi_b"]
    loss = experiment._resolve_loss(
        {"kind": "focal", "gamma": 2.0, "alpha": "inverse_frequency"}, rows, task
    )
    assert isinstance(loss, LossConfig)
    assert loss.alpha is not None and len(loss.alpha) == 4
    order = task.labels
    # rarer classes get larger alpha
    assert loss.alpha[order.index("PRFN")] > loss.alpha[order.index("HATE")]
    assert loss.alpha[order.index("HATE")] > loss.alpha[order.index("NONE")]


def test_resolve_loss_zero_count_class_rejected():
    rows = [
        corpus.LabeledExample(id=f"a{i}", text="t", coarse_label="HOF", fine_label="HATE")
        for i in range(3)
    ]
    with pytest.raises(ValidationError, match="smooth"):
        experiment._resolve_loss(
            {"kind": "focal", "alpha": "inverse_frequency"}, rows, experiment.TASKS["hi_b"]
        )


def test_resolve_config_defaults_per_task():
    base = {"task": "en_a", "train_file": "x.csv"}
    resolved = experiment.resolve_config(base)
    assert resolved["head"]["type"] == "kim_cnn"
    assert resolved["head"]["layers_to_concat"] == 4
    assert resolved["head"]["conv_widths"] == [2, 3, 4]
    assert len(resolved["feature_schema"]) == 7

    hi = experiment.resolve_config({"task": "hi_a", "train_file": "x.csv"})
    assert hi["head"]["conv_widths"] == [3]
    assert hi["head"]["layers_to_concat"] is None  # all layers

    ichcl = experiment.resolve_config({"task": "ichcl", "train_file": "x.json"})
    assert ichcl["head"]["type"] == "mlp"
    assert ichcl["preprocess"]["transliterate_roman_hindi"] is True


def test_resolve_config_rejects_unknown_task():
    with pytest.raises(ValidationError):
        experiment.resolve_config({"task": "de_a"})
    with pytest.raises(ValidationError):
        experiment.resolve_config({})


def test_resolve_config_rejects_mlp_with_features():
    with pytest.raises(ValidationError, match="feature"):
        experiment.resolve_config({
            "task": "en_a", "train_file": "x.csv", "head": {"type": "mlp"},
        })
    # fine once the schema is cleared
    resolved = experiment.resolve_config({
        "task": "en_a", "train_file": "x.csv", "head": {"type": "mlp"},
        "feature_schema": [],
    })
    assert resolved["head"]["type"] == "mlp"


def test_apply_overrides():
    cfg = {"task": "en_a", "train": {"seed": 1}}
    out = experiment.apply_overrides(
        cfg, ["train.seed=9", "train.loss.kind=focal", "head.conv_widths=[3]", "run=note"]
    )
    assert out["train"]["seed"] == 9
    assert out["train"]["loss"]["kind"] == "focal"
    assert out["head"]["conv_widths"] == [3]
    assert out["run"] == "note"
    assert cfg["train"]["seed"] == 1  # original untouched
    with pytest.raises(ValidationError):
        experiment.apply_overrides(cfg, ["no_equals_sign"])


def test_config_hash_stable_and_sensitive():
    a = experiment.resolve_config({"task": "en_a", "train_file": "x.csv"})
    b = experiment.resolve_config({"task": "en_a", "train_file": "x.csv"})
    c = experiment.resolve_config({"task": "en_a", "train_file": "x.csv",
                                   "train": {"seed": 99}})
    assert experiment.config_hash(a) == experiment.config_hash(b)
    assert experiment.config_hash(a) != experiment.config_hash(c)


def test_pipeline_standardize_features(tmp_path):
    rows = []
    for i in range(24):
        label = "HOF" if i % 2 else "NOT"
        marker = "marker1" if i % 2 else "marker0"
        rows.append(corpus.LabeledExample(
            id=f"s{i}", text=f"{marker} Word! {marker}", coarse_label=label))
    data_path = tmp_path / "d.csv"
    corpus.write_flat_dataset(data_path, rows)
    cfg = {
        "task": "en_a",
        "train_file": str(data_path),
        "feature_schema": ["q_mark_frac", "excl_frac", "capital_frac"],
        "head": {"conv_widths": [2], "filters_per_width": 4, "fc_dim": 8, "dropout": 0.0},
        "train": {"k_folds": 3, "learning_rate": 0.02, "batch_size": 8,
                  "max_epochs": 8, "patience": 3, "seed": 3,
                  "standardize_features": True},
    }
    run_dir = tmp_path / "run"
    metrics = experiment.run_train(experiment.resolve_config(cfg), run_dir)
    assert metrics["mean_accuracy"] >= 0.9
    # per-fold standardization stats are persisted for prediction
    import numpy as np
    from hatekit.heads import load_checkpoint
    _, _, extra = load_checkpoint(run_dir / "fold_0" / "checkpoint.npz")
    assert "feature_mean" in extra and len(extra["feature_mean"]) == 3
    probs, _ = experiment.predict_run(run_dir, data_path)
    assert len(probs) == 24
