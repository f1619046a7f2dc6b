import numpy as np
import pytest

from hatekit.corpus import LabeledExample
from hatekit.encoder import ToyEncoder, concat_last_k_layers
from hatekit.errors import ValidationError
from hatekit.heads import KimCnnConfig
from hatekit.losses import LossConfig
from hatekit.synthetic import make_separable_dataset
from hatekit.training import (
    Adadelta,
    Adam,
    PreparedExample,
    TrainConfig,
    accuracy,
    average_fold_probs,
    confusion_matrix,
    macro_f1,
    stratified_kfold,
    train_fold,
)


def _examples(labels):
    return [
        LabeledExample(id=f"e{i}", text=f"text {i}", coarse_label=lab)
        for i, lab in enumerate(labels)
    ]


def test_kfold_exact_divisibility():
    examples = _examples(["HOF"] * 5 + ["NOT"] * 5)
    folds = stratified_kfold(examples, 5, seed=0)
    for _, val_ids in folds:
        labels = [ex.coarse_label for ex in examples if ex.id in set(val_ids)]
        assert sorted(labels) == ["HOF", "NOT"]


def test_kfold_partition_contract():
    examples = _examples(["HOF"] * 13 + ["NOT"] * 7)
    folds = stratified_kfold(examples, 4, seed=1)
    all_val = [i for _, val in folds for i in val]
    assert sorted(all_val) == sorted(ex.id for ex in examples)
    assert len(all_val) == len(set(all_val))
    for train_ids, val_ids in folds:
        assert not set(train_ids) & set(val_ids)
        assert sorted(train_ids + val_ids) == sorted(ex.id for ex in examples)


def test_kfold_class_balance_fuzz():
    rng = np.random.default_rng(2)
    for _ in range(100):
        k = int(rng.integers(2, 6))
        n_hof = int(rng.integers(k, 40))
        n_not = int(rng.integers(k, 40))
        examples = _examples(["HOF"] * n_hof + ["NOT"] * n_not)
        folds = stratified_kfold(examples, k, seed=int(rng.integers(0, 1000)))
        by_id = {ex.id: ex.coarse_label for ex in examples}
        for _, val_ids in folds:
            got_hof = sum(1 for i in val_ids if by_id[i] == "HOF")
            got_not = len(val_ids) - got_hof
            assert abs(got_hof - n_hof / k) <= 1
            assert abs(got_not - n_not / k) <= 1


def test_kfold_deterministic_per_seed():
    examples = _examples(["HOF"] * 9 + ["NOT"] * 6)
    assert stratified_kfold(examples, 3, seed=7) == stratified_kfold(examples, 3, seed=7)
    assert stratified_kfold(examples, 3, seed=7) != stratified_kfold(examples, 3, seed=8)


def test_kfold_small_class_names_it():
    examples = _examples(["HOF"] * 10 + ["NOT"] * 2)
    with pytest.raises(ValidationError, match="NOT"):
        stratified_kfold(examples, 3, seed=0)


def test_kfold_missing_label():
    examples = [LabeledExample(id="x", text="t")]
    with pytest.raises(ValidationError, match="x"):
        stratified_kfold(examples, 2, seed=0)


def test_accuracy_and_macro_f1_perfect():
    assert accuracy([0, 1, 0], [0, 1, 0]) == 1.0
    assert macro_f1([0, 1, 0], [0, 1, 0], 2) == 1.0


def test_hand_computed_binary_case():
    # preds [A, A], golds [A, B]: F1_A = 2/3, F1_B = 0 -> macro 1/3
    assert accuracy([0, 0], [0, 1]) == 0.5
    assert macro_f1([0, 0], [0, 1], 2) == pytest.approx(1 / 3, abs=1e-12)


def _oracle_metrics(preds, golds, num_classes):
    """Brute-force confusion-matrix scorer, independent of the library path."""
    correct = sum(1 for p, g in zip(preds, golds) if p == g)
    f1s = []
    for c in range(num_classes):
        tp = sum(1 for p, g in zip(preds, golds) if p == c and g == c)
        fp = sum(1 for p, g in zip(preds, golds) if p == c and g != c)
        fn = sum(1 for p, g in zip(preds, golds) if p != c and g == c)
        if tp == 0 and (fp > 0 or fn > 0):
            f1s.append(0.0)
        elif tp == 0:
            f1s.append(0.0)
        else:
            precision = tp / (tp + fp)
            recall = tp / (tp + fn)
            f1s.append(2 * precision * recall / (precision + recall))
    return correct / len(preds), sum(f1s) / num_classes


def test_metrics_against_brute_force_oracle():
    rng = np.random.default_rng(4)
    for _ in range(200):
        n_classes = int(rng.integers(2, 5))
        n = int(rng.integers(1, 51))
        # restrict the predicted range sometimes to force zero-support classes
        pred_hi = int(rng.integers(1, n_classes + 1))
        preds = rng.integers(0, pred_hi, size=n).tolist()
        golds = rng.integers(0, n_classes, size=n).tolist()
        exp_acc, exp_f1 = _oracle_metrics(preds, golds, n_classes)
        assert abs(accuracy(preds, golds) - exp_acc) < 1e-12
        assert abs(macro_f1(preds, golds, n_classes) - exp_f1) < 1e-12


def test_metrics_permutation_invariant():
    rng = np.random.default_rng(5)
    preds = rng.integers(0, 3, size=30).tolist()
    golds = rng.integers(0, 3, size=30).tolist()
    perm = rng.permutation(30)
    shuffled_p = [preds[i] for i in perm]
    shuffled_g = [golds[i] for i in perm]
    assert accuracy(preds, golds) == accuracy(shuffled_p, shuffled_g)
    assert macro_f1(preds, golds, 3) == macro_f1(shuffled_p, shuffled_g, 3)


def test_metrics_validation():
    with pytest.raises(ValidationError):
        accuracy([0], [0, 1])
    with pytest.raises(ValidationError):
        macro_f1([], [], 2)
    with pytest.raises(ValidationError):
        macro_f1([5], [0], 2)


def test_confusion_matrix_layout():
    cm = confusion_matrix([0, 0, 1], [0, 1, 1], 2)
    assert cm.tolist() == [[1, 0], [1, 1]]


def _prepare(examples, encoder, k_layers=4):
    data = {}
    for ex in examples:
        out = encoder.encode(ex.text)
        data[ex.id] = PreparedExample(
            id=ex.id,
            inputs=concat_last_k_layers(out, k_layers),
            features=np.zeros(0),
            label=0 if ex.coarse_label == "HOF" else 1,
        )
    return data


HEAD = KimCnnConfig(input_width=4 * 32, conv_widths=(2, 3), filters_per_width=8,
                    fc_dim=16, dropout=0.2, num_classes=2, feature_dim=0)


def test_train_fold_learns_separable_data():
    examples = make_separable_dataset(120, seed=0)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 4, seed=0)
    cfg = TrainConfig(k_folds=4, learning_rate=0.01, batch_size=16, max_epochs=12,
                      patience=3, seed=0)
    run = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert run.val_metrics["accuracy"] >= 0.95
    assert set(run.val_probs) == set(folds[0][1])
    for vec in run.val_probs.values():
        assert vec.sum() == pytest.approx(1.0, abs=1e-6)


def test_zero_learning_rate_stops_after_patience():
    examples = make_separable_dataset(40, seed=1)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 4, seed=1)
    cfg = TrainConfig(k_folds=4, learning_rate=0.0, batch_size=8, max_epochs=50,
                      patience=1, seed=1)
    run = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert run.epochs_run == 2  # epoch 1 sets the best, epoch 2 cannot improve
    assert run.best_epoch == 1


def test_train_fold_deterministic():
    examples = make_separable_dataset(60, seed=2)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 3, seed=2)
    cfg = TrainConfig(k_folds=3, learning_rate=0.01, batch_size=8, max_epochs=6,
                      patience=2, seed=5)
    a = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    b = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert set(a.val_probs) == set(b.val_probs)
    for ex_id in a.val_probs:
        assert a.val_probs[ex_id].tobytes() == b.val_probs[ex_id].tobytes()


def test_early_stopping_returns_best_epoch_params():
    examples = make_separable_dataset(60, seed=3)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 3, seed=3)
    cfg = TrainConfig(k_folds=3, learning_rate=0.01, batch_size=8, max_epochs=10,
                      patience=2, seed=3)
    run = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert run.best_epoch <= run.epochs_run


def test_train_fold_adadelta():
    examples = make_separable_dataset(60, seed=4)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 3, seed=4)
    cfg = TrainConfig(k_folds=3, optimizer="adadelta", learning_rate=1.0, batch_size=8,
                      max_epochs=12, patience=4, seed=4)
    run = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert run.val_metrics["accuracy"] >= 0.9


def test_train_fold_focal_loss():
    examples = make_separable_dataset(60, seed=5)
    data = _prepare(examples, ToyEncoder())
    folds = stratified_kfold(examples, 3, seed=5)
    cfg = TrainConfig(k_folds=3, learning_rate=0.01, batch_size=8, max_epochs=12,
                      patience=4, seed=5, loss=LossConfig("focal", gamma=2.0))
    run = train_fold(data, folds[0][0], folds[0][1], HEAD, cfg, fold_index=0)
    assert run.val_metrics["accuracy"] >= 0.9


def test_train_fold_unknown_ids():
    examples = make_separable_dataset(20, seed=6)
    data = _prepare(examples, ToyEncoder())
    cfg = TrainConfig(k_folds=2, seed=0)
    with pytest.raises(ValidationError, match="ghost"):
        train_fold(data, ["ghost"], [examples[0].id], HEAD, cfg)


def test_average_fold_probs():
    maps = [
        {"a": np.array([0.6, 0.4]), "b": np.array([1.0, 0.0])},
        {"a": np.array([0.2, 0.8]), "b": np.array([0.5, 0.5])},
    ]
    avg = average_fold_probs(maps)
    assert avg["a"] == pytest.approx(np.array([0.4, 0.6]))
    single = average_fold_probs([maps[0]])
    assert single["b"] == pytest.approx(np.array([1.0, 0.0]))


def test_average_fold_probs_simplex_closure():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n_ids, n_classes, n_folds = int(rng.integers(1, 6)), int(rng.integers(2, 5)), int(rng.integers(1, 5))
        maps = []
        for _ in range(n_folds):
            m = {}
            for i in range(n_ids):
                p = rng.random(n_classes) + 1e-6
                m[f"id{i}"] = p / p.sum()
            maps.append(m)
        for vec in average_fold_probs(maps).values():
            assert vec.sum() == pytest.approx(1.0, abs=1e-6)


def test_average_fold_probs_id_mismatch():
    with pytest.raises(ValidationError, match="b"):
        average_fold_probs([{"a": np.array([1.0])}, {"b": np.array([1.0])}])


def test_optimizers_reduce_quadratic():
    # sanity: both optimizers descend f(x) = ||x||^2
    # (Adadelta accumulates its step size from zero, so it needs longer)
    for opt, steps in ((Adam(0.1), 200), (Adadelta(1.0), 2000)):
        params = {"x": np.array([3.0, -2.0])}
        for _ in range(steps):
            opt.step(params, {"x": 2 * params["x"]})
        assert np.linalg.norm(params["x"]) < 1e-3


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(k_folds=1)
    with pytest.raises(ValidationError):
        TrainConfig(optimizer="sgd")
    with pytest.raises(ValidationError):
        TrainConfig(patience=0)
    with pytest.raises(ValidationError):
        TrainConfig(early_stopping_metric="auc")
