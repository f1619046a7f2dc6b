"""Experiment configuration and end-to-end orchestration.

One experiment per JSON config file; CLI flags override file values.
Every run directory contains the resolved config, per-fold checkpoints
and a versioned metrics.json embedding the config hash, so results are
reproducible from the config file plus the seed alone.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import corpus, preprocess
from .context import flatten_threads
from .encoder import concat_last_k_layers, create_encoder, encode
from .errors import ValidationError
from .features import EMPTY_LEXICON, build_feature_vector, load_lexicon
from .heads import KimCnnConfig, MlpConfig, load_checkpoint, save_checkpoint
from .losses import LossConfig, inverse_frequency_weights
from .training import (
    FoldRun,
    PreparedExample,
    TrainConfig,
    average_fold_probs,
    make_head,
    stratified_kfold,
    train_fold,
)

METRICS_SCHEMA_VERSION = 1
RUNS_DIR_ENV = "HATEKIT_RUNS_DIR"


@dataclass(frozen=True)
class Task:
    name: str
    language: str
    label_kind: str
    labels: tuple[str, ...]
    uses_threads: bool
    default_head: str
    default_layers: int | None  # None = concatenate all encoder layers
    default_conv_widths: tuple[int, ...]
    default_features: tuple[str, ...]
    default_loss: dict


_EN_FEATURES = (
    "q_mark_frac", "excl_frac", "capital_frac",
    "profanity_frac", "sent_neg", "sent_neu", "sent_pos",
)
_INDIC_FEATURES = ("profanity_frac", "sent_neg", "sent_neu", "sent_pos")

TASKS: dict[str, Task] = {
    "en_a": Task("en_a", "en", "coarse", corpus.COARSE_LABELS, False,
                 "kim_cnn", 4, (2, 3, 4), _EN_FEATURES, {"kind": "cross_entropy"}),
    "en_b": Task("en_b", "en", "fine", corpus.FINE_LABELS, False,
                 "kim_cnn", 4, (2, 3, 4), _EN_FEATURES, {"kind": "cross_entropy"}),
    "hi_a": Task("hi_a", "hi", "coarse", corpus.COARSE_LABELS, False,
                 "kim_cnn", None, (3,), _INDIC_FEATURES, {"kind": "cross_entropy"}),
    "hi_b": Task("hi_b", "hi", "fine", corpus.FINE_LABELS, False,
                 "kim_cnn", None, (3,), _INDIC_FEATURES,
                 {"kind": "focal", "gamma": 2.0, "alpha": "inverse_frequency"}),
    "mr_a": Task("mr_a", "mr", "coarse", corpus.COARSE_LABELS, False,
                 "kim_cnn", None, (3,), _INDIC_FEATURES, {"kind": "cross_entropy"}),
    "ichcl": Task("ichcl", "hi_en_mix", "coarse", corpus.COARSE_LABELS, True,
                  "mlp", None, (3,), (), {"kind": "cross_entropy"}),
}


def config_hash(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValidationError(f"{path}: invalid config JSON ({err})") from None
    if not isinstance(cfg, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply `dotted.key=value` overrides; values parse as JSON, else strings."""
    out = json.loads(json.dumps(cfg))
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"override {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"override {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return out


def resolve_config(cfg: dict) -> dict:
    """Fill in per-task defaults; the result is what gets hashed and stored."""
    task_name = cfg.get("task")
    if task_name not in TASKS:
        raise ValidationError(f"config needs a task, one of {sorted(TASKS)}")
    task = TASKS[task_name]

    resolved = {
        "task": task_name,
        "train_file": cfg.get("train_file"),
        "extra_train_files": list(cfg.get("extra_train_files", [])),
        "columns": cfg.get("columns"),
        "lexicon_files": list(cfg.get("lexicon_files", [])),
        "stopword_file": cfg.get("stopword_file"),
        "feature_schema": list(cfg.get("feature_schema", task.default_features)),
        "context_separator": cfg.get("context_separator", " "),
    }

    pp = dict(cfg.get("preprocess", {}))
    defaults = preprocess.default_config(task_name)
    resolved["preprocess"] = {
        "remove_urls": pp.get("remove_urls", defaults.remove_urls),
        "remove_mentions": pp.get("remove_mentions", defaults.remove_mentions),
        "remove_hashtags": pp.get("remove_hashtags", defaults.remove_hashtags),
        "hashtag_keep_text": pp.get("hashtag_keep_text", defaults.hashtag_keep_text),
        "remove_punctuation": pp.get("remove_punctuation", defaults.remove_punctuation),
        "emoji_mode": pp.get("emoji_mode", defaults.emoji_mode),
        "normalize_indic": pp.get("normalize_indic", defaults.normalize_indic),
        "remove_stopwords": pp.get("remove_stopwords", defaults.remove_stopwords),
        "transliterate_roman_hindi": pp.get(
            "transliterate_roman_hindi", defaults.transliterate_roman_hindi
        ),
        "lowercase_roman": pp.get("lowercase_roman", defaults.lowercase_roman),
    }

    enc = dict(cfg.get("encoder", {}))
    resolved["encoder"] = {
        "name": enc.get("name", "toy"),
        "seed": int(enc.get("seed", 0)),
        "num_layers": int(enc.get("num_layers", 4)),
        "hidden_dim": int(enc.get("hidden_dim", 32)),
        "max_tokens": int(enc.get("max_tokens", 128)),
    }

    head = dict(cfg.get("head", {}))
    head_type = head.get("type", task.default_head)
    if head_type not in ("kim_cnn", "mlp"):
        raise ValidationError(f"head type must be kim_cnn or mlp, got {head_type!r}")
    if head_type == "mlp" and resolved["feature_schema"]:
        raise ValidationError(
            "the mlp head has no feature fusion; set feature_schema=[] or use kim_cnn"
        )
    resolved["head"] = {
        "type": head_type,
        "layers_to_concat": head.get("layers_to_concat", task.default_layers),
        "conv_widths": list(head.get("conv_widths", task.default_conv_widths)),
        "filters_per_width": int(head.get("filters_per_width", 128)),
        "fc_dim": int(head.get("fc_dim", 128)),
        "dropout": float(head.get("dropout", 0.5)),
    }

    tr = dict(cfg.get("train", {}))
    loss = dict(tr.get("loss", task.default_loss))
    resolved["train"] = {
        "k_folds": int(tr.get("k_folds", 5)),
        "optimizer": tr.get("optimizer", "adam"),
        "learning_rate": float(tr.get("learning_rate", 1e-3)),
        "batch_size": int(tr.get("batch_size", 32)),
        "max_epochs": int(tr.get("max_epochs", 30)),
        "patience": int(tr.get("patience", 3)),
        "seed": int(tr.get("seed", 0)),
        "early_stopping_metric": tr.get("early_stopping_metric", "macro_f1"),
        "standardize_features": bool(tr.get("standardize_features", False)),
        "loss": loss,
    }
    return resolved


def runs_root() -> Path:
    return Path(os.environ.get(RUNS_DIR_ENV, "runs"))


class Pipeline:
    """Shared preprocessing/encoding/feature machinery for train and predict."""

    def __init__(self, resolved: dict, transliterator=None, sentiment_provider=None):
        self.resolved = resolved
        self.task = TASKS[resolved["task"]]
        pp = dict(resolved["preprocess"])
        stopwords = frozenset()
        if pp["remove_stopwords"]:
            if resolved.get("stopword_file"):
                stopwords = preprocess.load_stopwords(resolved["stopword_file"])
            else:
                stopwords = preprocess.marathi_stopwords()
        self.pp_config = preprocess.PreprocessConfig(stopword_list=stopwords, **pp)
        self.stats = preprocess.CleanStats()
        self.transliterator = transliterator
        self.sentiment_provider = sentiment_provider
        self.lexicon = (
            load_lexicon(resolved["lexicon_files"])
            if resolved["lexicon_files"]
            else EMPTY_LEXICON
        )
        self.encoder = create_encoder(resolved["encoder"])
        self.feature_schema = tuple(resolved["feature_schema"])

    def clean(self, text: str) -> str:
        return preprocess.clean_text(
            text, self.pp_config, transliterator=self.transliterator, stats=self.stats
        )

    def head_config(self, num_classes: int):
        head = self.resolved["head"]
        if head["type"] == "mlp":
            return MlpConfig(input_dim=self.encoder.spec.hidden_dim, num_classes=num_classes)
        k = head["layers_to_concat"] or self.encoder.spec.num_layers
        k = min(int(k), self.encoder.spec.num_layers)
        return KimCnnConfig(
            input_width=k * self.encoder.spec.hidden_dim,
            conv_widths=tuple(head["conv_widths"]),
            filters_per_width=head["filters_per_width"],
            fc_dim=head["fc_dim"],
            dropout=head["dropout"],
            num_classes=num_classes,
            feature_dim=len(self.feature_schema),
        )

    def _encode_inputs(self, text_a: str, text_b: str | None) -> np.ndarray:
        out = encode(self.encoder, text_a, text_b or None)
        head = self.resolved["head"]
        if head["type"] == "mlp":
            return out.pooled
        k = head["layers_to_concat"] or self.encoder.spec.num_layers
        return concat_last_k_layers(out, min(int(k), self.encoder.spec.num_layers))

    def prepare_example(self, ex_id: str, raw_text: str, context: str | None,
                        label: int) -> PreparedExample:
        target_clean = self.clean(raw_text)
        inputs = self._encode_inputs(target_clean, context)
        feats = build_feature_vector(
            raw_text,
            preprocess.tokenize(target_clean),
            lexicon=self.lexicon,
            provider=self.sentiment_provider,
            schema=self.feature_schema,
        ).as_array()
        return PreparedExample(id=ex_id, inputs=inputs, features=feats, label=label)


def _label_index(task: Task, label: str) -> int:
    return task.labels.index(label)


def _load_examples(resolved: dict, require_labels: bool = True) -> list[corpus.LabeledExample]:
    task = TASKS[resolved["task"]]
    paths = [resolved["train_file"], *resolved.get("extra_train_files", [])]
    columns = resolved.get("columns")
    if columns is None:
        columns = {"id": "text_id", "text": "text", "coarse": None, "fine": None}
        if task.label_kind == "coarse":
            columns["coarse"] = "task_1"
        else:
            columns["fine"] = "task_2"
    examples: list[corpus.LabeledExample] = []
    for path in paths:
        if not path or not Path(path).exists():
            raise ValidationError(f"dataset file not found: {path}")
        examples.extend(
            corpus.load_flat_dataset(
                path, language=task.language, columns=columns, require_labels=require_labels
            )
        )
    return examples


def _prepare_flat(pipeline: Pipeline, examples, task: Task) -> dict[str, PreparedExample]:
    data = {}
    for ex in examples:
        label = ex.label(task.label_kind)
        idx = _label_index(task, label) if label is not None else -1
        data[ex.id] = pipeline.prepare_example(ex.id, ex.text, None, idx)
    return data


def _prepare_threads(pipeline: Pipeline, threads, require_labels: bool):
    """Contextual inputs for every node, keyed by node id."""
    data: dict[str, PreparedExample] = {}
    raw_by_id: dict[str, str] = {}
    inputs = flatten_threads(
        threads, cleaner=pipeline.clean, separator=pipeline.resolved["context_separator"]
    )
    label_by_id = {}
    for thread in threads:
        for node in thread:
            label_by_id[node.id] = node.label
            raw_by_id[node.id] = node.text
    task = pipeline.task
    for ci in inputs:
        label = label_by_id[ci.node_id]
        if label is None and require_labels:
            raise ValidationError(f"thread node {ci.node_id} missing label")
        idx = _label_index(task, label) if label is not None else -1
        text_a, text_b = ci.as_pair()
        enc_inputs = pipeline._encode_inputs(text_a, text_b)
        feats = build_feature_vector(
            raw_by_id[ci.node_id],
            preprocess.tokenize(text_a),
            lexicon=pipeline.lexicon,
            provider=pipeline.sentiment_provider,
            schema=pipeline.feature_schema,
        ).as_array()
        data[ci.node_id] = PreparedExample(
            id=ci.node_id, inputs=enc_inputs, features=feats, label=idx
        )
    return data


def _resolve_loss(loss_cfg: dict, examples, task: Task) -> LossConfig:
    cfg = dict(loss_cfg)
    alpha = cfg.get("alpha")
    weights = cfg.get("class_weights")
    needs_dist = alpha == "inverse_frequency" or weights == "inverse_frequency"
    if needs_dist:
        dist = corpus.class_distribution(list(examples), task.label_kind)
        inv = tuple(inverse_frequency_weights(dist, class_order=task.labels))
        if alpha == "inverse_frequency":
            cfg["alpha"] = inv
        if weights == "inverse_frequency":
            cfg["class_weights"] = inv
    if isinstance(cfg.get("alpha"), list):
        cfg["alpha"] = tuple(cfg["alpha"])
    if isinstance(cfg.get("class_weights"), list):
        cfg["class_weights"] = tuple(cfg["class_weights"])
    return LossConfig(**cfg)


def run_train(resolved: dict, run_dir: Path, fold_workers: int = 1,
              transliterator=None, sentiment_provider=None) -> dict:
    """Train K folds and write checkpoints plus metrics.json under run_dir."""
    task = TASKS[resolved["task"]]
    pipeline = Pipeline(resolved, transliterator, sentiment_provider)

    if task.uses_threads:
        threads = corpus.load_threads(resolved["train_file"])
        data = _prepare_threads(pipeline, threads, require_labels=True)
        labeled = [
            corpus.LabeledExample(
                id=node.id, text=node.text, coarse_label=node.label,
                language=task.language,
            )
            for thread in threads
            for node in thread
        ]
    else:
        labeled = _load_examples(resolved)
        data = _prepare_flat(pipeline, labeled, task)

    train_cfg_raw = dict(resolved["train"])
    loss_config = _resolve_loss(train_cfg_raw.pop("loss"), labeled, task)
    train_cfg = TrainConfig(loss=loss_config, **train_cfg_raw)
    head_cfg = pipeline.head_config(num_classes=len(task.labels))

    folds = stratified_kfold(labeled, train_cfg.k_folds, train_cfg.seed, task.label_kind)

    def run_one(fold_index: int) -> FoldRun:
        train_ids, val_ids = folds[fold_index]
        return train_fold(
            data, train_ids, val_ids, head_cfg, train_cfg, fold_index=fold_index,
            num_classes=len(task.labels),
        )

    if fold_workers > 1:
        with ThreadPoolExecutor(max_workers=fold_workers) as pool:
            runs = list(pool.map(run_one, range(len(folds))))
    else:
        runs = [run_one(i) for i in range(len(folds))]

    dist = corpus.class_distribution(labeled, task.label_kind)
    run_dir.mkdir(parents=True, exist_ok=True)
    for fold_run in runs:
        fold_dir = run_dir / f"fold_{fold_run.fold_index}"
        fold_dir.mkdir(parents=True, exist_ok=True)
        extra = {"fold_index": fold_run.fold_index, "best_epoch": fold_run.best_epoch}
        if fold_run.feature_mean is not None:
            extra["feature_mean"] = [float(v) for v in fold_run.feature_mean]
            extra["feature_std"] = [float(v) for v in fold_run.feature_std]
        save_checkpoint(fold_dir / "checkpoint.npz", fold_run.params, head_cfg, extra)

    metrics = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "task": task.name,
        "seed": train_cfg.seed,
        "config_hash": config_hash(resolved),
        "label_order": list(task.labels),
        "train_class_counts": dict(dist.counts),
        "folds": [
            {
                "fold": r.fold_index,
                "accuracy": r.val_metrics["accuracy"],
                "macro_f1": r.val_metrics["macro_f1"],
                "epochs_run": r.epochs_run,
                "best_epoch": r.best_epoch,
            }
            for r in runs
        ],
        "mean_accuracy": float(np.mean([r.val_metrics["accuracy"] for r in runs])),
        "mean_macro_f1": float(np.mean([r.val_metrics["macro_f1"] for r in runs])),
    }
    _write_json(run_dir / "metrics.json", metrics)
    _write_json(run_dir / "config.json", resolved)
    return metrics


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _majority_label(counts: dict[str, int], labels: tuple[str, ...]) -> str:
    return max(labels, key=lambda lab: (counts.get(lab, 0), -labels.index(lab)))


def predict_run(run_dir: Path, input_file, transliterator=None,
                sentiment_provider=None) -> tuple[dict[str, np.ndarray], dict]:
    """Fold-averaged probabilities for every input id from one run."""
    resolved = load_config_file(run_dir / "config.json")
    metrics = load_config_file(run_dir / "metrics.json")
    task = TASKS[resolved["task"]]
    pipeline = Pipeline(resolved, transliterator, sentiment_provider)

    if task.uses_threads:
        threads = corpus.load_threads(input_file)
        data = _prepare_threads(pipeline, threads, require_labels=False)
        empty_ids = {
            node.id for thread in threads for node in thread if not node.text.strip()
        }
    else:
        resolved_in = dict(resolved, train_file=str(input_file), extra_train_files=[])
        examples = _load_examples(resolved_in, require_labels=False)
        data = _prepare_flat(pipeline, examples, task)
        empty_ids = {ex.id for ex in examples if ex.is_empty}

    fold_dirs = sorted(run_dir.glob("fold_*/checkpoint.npz"))
    if not fold_dirs:
        raise ValidationError(f"no fold checkpoints under {run_dir}")
    per_fold: list[dict[str, np.ndarray]] = []
    for ckpt in fold_dirs:
        params, head_cfg, extra = load_checkpoint(ckpt)
        head = make_head(head_cfg)
        f_mean = np.asarray(extra["feature_mean"]) if "feature_mean" in extra else None
        f_std = np.asarray(extra["feature_std"]) if "feature_std" in extra else None
        probs: dict[str, np.ndarray] = {}
        for ex_id, ex in data.items():
            feats = ex.features
            if f_mean is not None and feats.size:
                feats = (feats - f_mean) / f_std
            probs[ex_id] = head.forward(params, ex.inputs, feats, train_mode=False)
        per_fold.append(probs)

    averaged = average_fold_probs(per_fold)
    # Blank rows are kept so every id gets a prediction; they take the
    # majority class prior from training rather than an encoder guess.
    majority = _majority_label(metrics["train_class_counts"], task.labels)
    prior = np.zeros(len(task.labels))
    prior[task.labels.index(majority)] = 1.0
    for ex_id in empty_ids:
        averaged[ex_id] = prior
    return averaged, resolved


def labels_from_probs(probs: dict[str, np.ndarray], labels: tuple[str, ...]) -> dict[str, str]:
    return {ex_id: labels[int(np.argmax(vec))] for ex_id, vec in probs.items()}
