"""Command-line entry point: preprocess, train, predict, evaluate.

Exit codes: 0 success, 2 validation/config error, 3 numeric failure
during training. Configs are file-first (one experiment per JSON file)
with --set key=value overrides for sweeps.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, experiment
from .errors import HatekitError, NumericError
from .training import accuracy, confusion_matrix, macro_f1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _load_resolved(args) -> dict:
    cfg = experiment.load_config_file(args.config) if args.config else {}
    overrides = list(args.set or [])
    if getattr(args, "task", None):
        overrides.append(f"task={args.task}")
    if getattr(args, "train_file", None):
        overrides.append(f"train_file={args.train_file}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"train.seed={args.seed}")
    cfg = experiment.apply_overrides(cfg, overrides)
    return experiment.resolve_config(cfg)


def cmd_preprocess(args) -> int:
    resolved = _load_resolved(args)
    task = experiment.TASKS[resolved["task"]]
    pipeline = experiment.Pipeline(resolved)

    out_path = Path(args.out)
    if task.uses_threads:
        threads = corpus.load_threads(resolved["train_file"])
        rows_in = sum(len(t) for t in threads)
        cleaned = [_clean_tree_dict(t, pipeline) for t in threads]
        out_path.write_text(
            json.dumps(cleaned, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
            encoding="utf-8",
        )
        rows_out = rows_in
    else:
        examples = experiment._load_examples(resolved)
        rows_in = len(examples)
        cleaned_examples = [
            corpus.LabeledExample(
                id=ex.id, text=pipeline.clean(ex.text),
                coarse_label=ex.coarse_label, fine_label=ex.fine_label,
                language=ex.language,
            )
            for ex in examples
        ]
        columns = resolved.get("columns") or _default_columns(task)
        corpus.write_flat_dataset(out_path, cleaned_examples, columns=columns)
        rows_out = len(cleaned_examples)

    report = {
        "rows_in": rows_in,
        "rows_out": rows_out,
        "empty_after_cleaning": _count_empty(out_path, task, resolved),
        "unknown_emoji": pipeline.stats.unknown_emoji,
        "transliteration_failures": pipeline.stats.transliteration_failures,
    }
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def _default_columns(task) -> dict:
    columns = {"id": "text_id", "text": "text", "coarse": None, "fine": None}
    if task.label_kind == "coarse":
        columns["coarse"] = "task_1"
    else:
        columns["fine"] = "task_2"
    return columns


def _clean_tree_dict(thread, pipeline) -> dict:
    def node_dict(node, children):
        d = {"id": node.id, "text": pipeline.clean(node.text)}
        if node.label is not None:
            d["label"] = node.label
        d.update(children)
        return d

    by_parent: dict[str | None, list] = {}
    for node in thread:
        by_parent.setdefault(node.parent_id, []).append(node)

    def build(node):
        kids = by_parent.get(node.id, [])
        if node.depth == 0:
            return node_dict(node, {"comments": [build(k) for k in kids]})
        if node.depth == 1:
            return node_dict(node, {"replies": [build(k) for k in kids]})
        return node_dict(node, {})

    return build(thread.root)


def _count_empty(out_path, task, resolved) -> int:
    if task.uses_threads:
        threads = corpus.load_threads(out_path)
        return sum(1 for t in threads for n in t if not n.text.strip())
    columns = resolved.get("columns") or _default_columns(task)
    examples = corpus.load_flat_dataset(
        out_path, language=task.language, columns=columns, require_labels=False
    )
    return sum(1 for ex in examples if ex.is_empty)


def cmd_train(args) -> int:
    resolved = _load_resolved(args)
    run_dir = Path(args.run_dir) if args.run_dir else experiment.runs_root() / args.run_name
    metrics = experiment.run_train(resolved, run_dir, fold_workers=args.fold_workers)
    print(json.dumps(
        {
            "run_dir": str(run_dir),
            "mean_accuracy": metrics["mean_accuracy"],
            "mean_macro_f1": metrics["mean_macro_f1"],
        },
        sort_keys=True,
    ))
    return EXIT_OK


def cmd_predict(args) -> int:
    from .ensemble import EnsembleSpec, ensemble_predict

    if bool(args.run) == bool(args.ensemble):
        raise HatekitError("pass exactly one of --run or --ensemble")

    if args.run:
        probs, resolved = experiment.predict_run(Path(args.run), args.input)
        task = experiment.TASKS[resolved["task"]]
        labels = experiment.labels_from_probs(probs, task.labels)
    else:
        spec_cfg = experiment.load_config_file(args.ensemble)
        spec = EnsembleSpec(
            members=tuple(spec_cfg["members"]),
            mode=spec_cfg.get("mode", "soft_average"),
            tie_break=spec_cfg.get("tie_break", "soft_average_fallback"),
        )
        member_probs = []
        task = None
        for member in spec.members:
            probs, resolved = experiment.predict_run(Path(member), args.input)
            member_probs.append(probs)
            task = experiment.TASKS[resolved["task"]]
        indices = ensemble_predict(spec, member_probs)
        labels = {ex_id: task.labels[idx] for ex_id, idx in indices.items()}

    corpus.write_predictions(args.out, labels)
    print(json.dumps({"predictions": len(labels), "out": str(args.out)}, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    task = experiment.TASKS.get(args.task)
    if task is None:
        raise HatekitError(f"unknown task {args.task!r}; one of {sorted(experiment.TASKS)}")
    preds_by_id = corpus.read_predictions(args.predictions)

    if task.uses_threads:
        threads = corpus.load_threads(args.gold)
        gold_by_id = {
            n.id: n.label for t in threads for n in t if n.label is not None
        }
    else:
        columns = _default_columns(task)
        examples = corpus.load_flat_dataset(args.gold, language=task.language, columns=columns)
        gold_by_id = {ex.id: ex.label(task.label_kind) for ex in examples}

    missing = sorted(set(gold_by_id) - set(preds_by_id))
    extra = sorted(set(preds_by_id) - set(gold_by_id))
    if missing or extra:
        raise HatekitError(
            f"id mismatch between predictions and gold; missing={missing[:10]} extra={extra[:10]}"
        )

    ids = list(gold_by_id)
    to_idx = {lab: i for i, lab in enumerate(task.labels)}
    try:
        preds = [to_idx[preds_by_id[i]] for i in ids]
    except KeyError as err:
        raise HatekitError(f"prediction label {err} outside task enum {task.labels}") from None
    golds = [to_idx[gold_by_id[i]] for i in ids]

    cm = confusion_matrix(preds, golds, len(task.labels))
    report = {
        "accuracy": accuracy(preds, golds),
        "macro_f1": macro_f1(preds, golds, len(task.labels)),
        "labels": list(task.labels),
        "confusion_matrix": cm.tolist(),
        "n": len(ids),
    }
    print(f"accuracy  {report['accuracy']:.4f}")
    print(f"macro_f1  {report['macro_f1']:.4f}")
    print(f"confusion (rows=gold, cols=pred), labels {list(task.labels)}")
    for lab, row in zip(task.labels, cm):
        print(f"  {lab:>5} " + " ".join(f"{v:6d}" for v in row))
    if args.out:
        Path(args.out).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hatekit",
        description="Hate speech classification for code-mixed social media text",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="experiment config JSON file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        p.add_argument("--task", help="task name (overrides config)")
        p.add_argument("--train-file", dest="train_file", help="dataset path (overrides config)")
        p.add_argument("--seed", type=int, help="training seed (overrides config)")

    p = sub.add_parser("preprocess", help="clean a dataset and report tallies")
    add_config_args(p)
    p.add_argument("--out", required=True, help="cleaned dataset output path")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="K-fold training with early stopping")
    add_config_args(p)
    p.add_argument("--run-name", default="run", help="run directory name under the runs root")
    p.add_argument("--run-dir", help="explicit run directory (overrides --run-name)")
    p.add_argument("--fold-workers", type=int, default=1,
                   help="train folds in parallel threads (default 1)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write id,label predictions for an input file")
    p.add_argument("--run", help="run directory of a trained model")
    p.add_argument("--ensemble", help="ensemble spec JSON referencing run directories")
    p.add_argument("--input", required=True, help="dataset file to predict on")
    p.add_argument("--out", required=True, help="predictions CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--task", required=True, help="task name (fixes the label enum)")
    p.add_argument("--predictions", required=True, help="predictions CSV (id,label)")
    p.add_argument("--gold", required=True, help="gold dataset file")
    p.add_argument("--out", help="also write the metrics report as JSON")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except HatekitError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
