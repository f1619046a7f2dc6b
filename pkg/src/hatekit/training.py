"""Stratified K-fold training with early stopping, plus evaluation metrics.

Folds are independent: each builds its own head parameters from the run
seed and fold index, so results are reproducible whether folds run
sequentially or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import LabeledExample
from .errors import NumericError, ValidationError
from .heads import KimCnnConfig, KimCnnHead, MlpConfig, MlpHead
from .losses import LossConfig, loss_gradient, loss_value

OPTIMIZERS = ("adam", "adadelta")
EARLY_STOPPING_METRICS = ("macro_f1", "loss")


@dataclass(frozen=True)
class TrainConfig:
    k_folds: int = 5
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 3
    seed: int = 0
    loss: LossConfig = field(default_factory=LossConfig)
    early_stopping_metric: str = "macro_f1"
    standardize_features: bool = False

    def __post_init__(self):
        if self.k_folds < 2:
            raise ValidationError("k_folds must be >= 2")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"optimizer must be one of {OPTIMIZERS}")
        if self.learning_rate < 0 or not math.isfinite(self.learning_rate):
            raise ValidationError("learning_rate must be finite and >= 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValidationError("batch_size, max_epochs and patience must be positive")
        if self.early_stopping_metric not in EARLY_STOPPING_METRICS:
            raise ValidationError(
                f"early_stopping_metric must be one of {EARLY_STOPPING_METRICS}"
            )


@dataclass
class PreparedExample:
    """Encoder output plus features for one example, ready for a head."""

    id: str
    inputs: np.ndarray  # token matrix [T, input_width] for CNN, pooled [H] for MLP
    features: np.ndarray
    label: int


@dataclass
class FoldRun:
    fold_index: int
    params: dict[str, np.ndarray]
    val_metrics: dict[str, float]
    val_probs: dict[str, np.ndarray]
    epochs_run: int
    best_epoch: int
    feature_mean: np.ndarray | None = None
    feature_std: np.ndarray | None = None


def stratified_kfold(
    examples: Sequence[LabeledExample], k: int, seed: int, label_kind: str = "coarse"
) -> list[tuple[list[str], list[str]]]:
    """Partition example ids into k folds preserving class proportions.

    Validation folds are pairwise disjoint and cover the dataset; each
    class is spread round-robin after a seeded shuffle, so per-class
    validation counts stay within +-1 of count/k. Deterministic per seed.
    """
    if k < 2:
        raise ValidationError("k must be >= 2")
    groups: dict[str, list[str]] = {}
    for ex in examples:
        label = ex.label(label_kind)
        if label is None:
            raise ValidationError(f"example {ex.id} missing {label_kind} label")
        groups.setdefault(label, []).append(ex.id)
    for label, ids in sorted(groups.items()):
        if len(ids) < k:
            raise ValidationError(
                f"class {label!r} has only {len(ids)} examples; cannot stratify into {k} folds"
            )

    rng = np.random.default_rng(seed)
    val_folds: list[list[str]] = [[] for _ in range(k)]
    for label in sorted(groups):
        ids = groups[label]
        order = rng.permutation(len(ids))
        for j, idx in enumerate(order):
            val_folds[j % k].append(ids[idx])

    all_ids = [ex.id for ex in examples]
    folds = []
    for fold in range(k):
        val = set(val_folds[fold])
        train_ids = [i for i in all_ids if i not in val]
        val_ids = [i for i in all_ids if i in val]
        folds.append((train_ids, val_ids))
    return folds


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for key, g in grads.items():
            m = self.m.setdefault(key, np.zeros_like(g))
            v = self.v.setdefault(key, np.zeros_like(g))
            m += (1 - self.beta1) * (g - m)
            v += (1 - self.beta2) * (g * g - v)
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Adadelta:
    def __init__(self, learning_rate: float = 1.0, rho: float = 0.95, eps: float = 1e-6):
        self.lr = learning_rate
        self.rho, self.eps = rho, eps
        self.acc_grad: dict[str, np.ndarray] = {}
        self.acc_delta: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for key, g in grads.items():
            ag = self.acc_grad.setdefault(key, np.zeros_like(g))
            ad = self.acc_delta.setdefault(key, np.zeros_like(g))
            ag *= self.rho
            ag += (1 - self.rho) * g * g
            delta = -np.sqrt(ad + self.eps) / np.sqrt(ag + self.eps) * g
            ad *= self.rho
            ad += (1 - self.rho) * delta * delta
            params[key] += self.lr * delta


def make_optimizer(config: TrainConfig):
    if config.optimizer == "adam":
        return Adam(config.learning_rate)
    return Adadelta(config.learning_rate)


def make_head(head_config):
    if isinstance(head_config, KimCnnConfig):
        return KimCnnHead(head_config)
    if isinstance(head_config, MlpConfig):
        return MlpHead(head_config)
    raise ValidationError(f"unsupported head config {type(head_config).__name__}")


def _dropout_seed(seed: int, fold: int, epoch: int, step: int) -> int:
    h = seed & 0x7FFFFFFF
    for part in (fold, epoch, step):
        h = (h * 1000003 + part + 1) & 0x7FFFFFFFFFFFFFFF
    return h


def _predict_all(head, params, data, ids, f_mean, f_std):
    probs: dict[str, np.ndarray] = {}
    for ex_id in ids:
        ex = data[ex_id]
        feats = _standardized(ex.features, f_mean, f_std)
        probs[ex_id] = head.forward(params, ex.inputs, feats, train_mode=False)
    return probs


def _standardized(features, mean, std):
    if mean is None or features.size == 0:
        return features
    return (features - mean) / std


def train_fold(
    data: Mapping[str, PreparedExample],
    train_ids: Sequence[str],
    val_ids: Sequence[str],
    head_config,
    config: TrainConfig,
    fold_index: int = 0,
    num_classes: int | None = None,
) -> FoldRun:
    """Train one fold with early stopping on the validation score.

    Stops after `patience` consecutive epochs without strict improvement
    and returns the parameters of the best epoch. Deterministic given
    the config seed (and a deterministic encoder).
    """
    missing = [i for i in list(train_ids) + list(val_ids) if i not in data]
    if missing:
        raise ValidationError(f"ids not present in prepared data: {missing[:5]}")
    n_classes = num_classes or head_config.num_classes

    f_mean = f_std = None
    if config.standardize_features and data[train_ids[0]].features.size:
        feats = np.stack([data[i].features for i in train_ids])
        f_mean = feats.mean(axis=0)
        f_std = feats.std(axis=0)
        f_std[f_std < 1e-12] = 1.0

    head = make_head(head_config)
    rng_init = np.random.default_rng([config.seed, fold_index, 11])
    params = head.init_params(rng_init)
    optimizer = make_optimizer(config)

    best_score = -np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    bad_epochs = 0
    epochs_run = 0

    for epoch in range(1, config.max_epochs + 1):
        epochs_run = epoch
        rng_epoch = np.random.default_rng([config.seed, fold_index, 13, epoch])
        order = rng_epoch.permutation(len(train_ids))
        step = 0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grad_sum: dict[str, np.ndarray] = {}
            for idx in batch:
                ex = data[train_ids[idx]]
                feats = _standardized(ex.features, f_mean, f_std)
                probs = head.forward(
                    params, ex.inputs, feats,
                    train_mode=True,
                    dropout_seed=_dropout_seed(config.seed, fold_index, epoch, step),
                )
                step += 1
                value = loss_value(probs, ex.label, config.loss)
                if not math.isfinite(value):
                    raise NumericError(
                        f"non-finite loss {value} (fold {fold_index}, epoch {epoch}, "
                        f"batch starting at {start})",
                        fold=fold_index, epoch=epoch, batch=start, value=value,
                    )
                g_logits = loss_gradient(probs, ex.label, config.loss, wrt="logits")
                for key, g in head.backward(params, g_logits).items():
                    if key in grad_sum:
                        grad_sum[key] += g
                    else:
                        grad_sum[key] = g.astype(np.float64, copy=True)
            for key in grad_sum:
                grad_sum[key] /= len(batch)
            optimizer.step(params, grad_sum)

        val_probs = _predict_all(head, params, data, val_ids, f_mean, f_std)
        preds = [int(np.argmax(val_probs[i])) for i in val_ids]
        golds = [data[i].label for i in val_ids]
        if config.early_stopping_metric == "macro_f1":
            score = macro_f1(preds, golds, n_classes)
        else:
            score = -float(
                np.mean([loss_value(val_probs[i], data[i].label, config.loss) for i in val_ids])
            )
        if score > best_score:
            best_score = score
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break

    val_probs = _predict_all(head, best_params, data, val_ids, f_mean, f_std)
    preds = [int(np.argmax(val_probs[i])) for i in val_ids]
    golds = [data[i].label for i in val_ids]
    metrics = {
        "accuracy": accuracy(preds, golds),
        "macro_f1": macro_f1(preds, golds, n_classes),
    }
    return FoldRun(
        fold_index=fold_index,
        params=best_params,
        val_metrics=metrics,
        val_probs=val_probs,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        feature_mean=f_mean,
        feature_std=f_std,
    )


def average_fold_probs(prob_maps: Sequence[Mapping[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Element-wise mean of per-id probability vectors across folds."""
    if not prob_maps:
        raise ValidationError("no probability maps to average")
    ref = set(prob_maps[0])
    for m in prob_maps[1:]:
        if set(m) != ref:
            diff = sorted(ref.symmetric_difference(set(m)))
            raise ValidationError(f"probability maps disagree on ids: {diff[:10]}")
    return {
        ex_id: np.mean([np.asarray(m[ex_id], dtype=np.float64) for m in prob_maps], axis=0)
        for ex_id in prob_maps[0]
    }


def accuracy(preds: Sequence[int], golds: Sequence[int]) -> float:
    if len(preds) != len(golds):
        raise ValidationError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise ValidationError("cannot score an empty prediction list")
    return float(np.mean(np.asarray(preds) == np.asarray(golds)))


def confusion_matrix(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> np.ndarray:
    """Counts indexed [gold, predicted]."""
    if len(preds) != len(golds):
        raise ValidationError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    p = np.asarray(preds, dtype=np.int64)
    g = np.asarray(golds, dtype=np.int64)
    if p.size and (p.min() < 0 or p.max() >= num_classes or g.min() < 0 or g.max() >= num_classes):
        raise ValidationError(f"labels outside [0, {num_classes})")
    return np.bincount(g * num_classes + p, minlength=num_classes * num_classes).reshape(
        num_classes, num_classes
    )


def macro_f1(preds: Sequence[int], golds: Sequence[int], num_classes: int) -> float:
    """Unweighted mean of per-class F1; a class with no predicted and no
    actual positives contributes 0 (this matters for rare classes)."""
    if not preds:
        raise ValidationError("cannot score an empty prediction list")
    cm = confusion_matrix(preds, golds, num_classes)
    f1s = []
    for c in range(num_classes):
        tp = cm[c, c]
        fp = cm[:, c].sum() - tp
        fn = cm[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(f1s))
