"""Dataset loading and validation.

Handles two input shapes: flat delimited files of labeled tweets, and
JSON conversation threads (tweet -> comments -> replies). All loaders
are pure functions over immutable inputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import SchemaError, StructureError, ValidationError

COARSE_LABELS = ("HOF", "NOT")
FINE_LABELS = ("HATE", "OFFN", "PRFN", "NONE")
LANGUAGES = ("en", "hi", "mr", "hi_en_mix")

# Default column names for flat dataset files.
DEFAULT_COLUMNS = {"id": "text_id", "text": "text", "coarse": "task_1", "fine": "task_2"}

MAX_THREAD_DEPTH = 2


def canonical_label(value: str, kind: str) -> str | None:
    """Map a raw label string to its canonical enum value.

    Matching is case-insensitive; empty strings mean "label absent".
    Raises ValidationError for strings outside the enum.
    """
    s = value.strip().upper()
    if not s:
        return None
    allowed = COARSE_LABELS if kind == "coarse" else FINE_LABELS
    if s not in allowed:
        raise ValidationError(f"unknown {kind} label {value!r} (expected one of {allowed})")
    return s


@dataclass(frozen=True)
class LabeledExample:
    id: str
    text: str
    coarse_label: str | None = None
    fine_label: str | None = None
    language: str = "en"

    def __post_init__(self):
        if not self.id:
            raise ValidationError("example id must be non-empty")
        if self.language not in LANGUAGES:
            raise ValidationError(f"unknown language {self.language!r}")
        if self.coarse_label is not None and self.coarse_label not in COARSE_LABELS:
            raise ValidationError(f"id {self.id}: bad coarse label {self.coarse_label!r}")
        if self.fine_label is not None and self.fine_label not in FINE_LABELS:
            raise ValidationError(f"id {self.id}: bad fine label {self.fine_label!r}")
        if self.coarse_label is not None and self.fine_label is not None:
            if self.fine_label == "NONE" and self.coarse_label != "NOT":
                raise ValidationError(f"id {self.id}: fine NONE requires coarse NOT")
            if self.fine_label != "NONE" and self.coarse_label != "HOF":
                raise ValidationError(
                    f"id {self.id}: fine {self.fine_label} requires coarse HOF"
                )

    @property
    def is_empty(self) -> bool:
        """True when the raw text is blank after trimming.

        Such rows are kept (the id may still need a prediction) but
        downstream prediction falls back to the majority class.
        """
        return not self.text.strip()

    def label(self, kind: str) -> str | None:
        return self.coarse_label if kind == "coarse" else self.fine_label


@dataclass(frozen=True)
class ThreadNode:
    id: str
    text: str
    label: str | None = None
    parent_id: str | None = None
    depth: int = 0

    def __post_init__(self):
        if not self.id:
            raise ValidationError("thread node id must be non-empty")
        if self.label is not None and self.label not in COARSE_LABELS:
            raise ValidationError(f"node {self.id}: bad label {self.label!r}")
        if (self.depth == 0) != (self.parent_id is None):
            raise StructureError(
                f"node {self.id}: depth 0 exactly when parent_id is absent"
            )
        if self.depth < 0 or self.depth > MAX_THREAD_DEPTH:
            raise StructureError(
                f"node {self.id}: depth {self.depth} outside tweet/comment/reply hierarchy"
            )


@dataclass
class Thread:
    """One conversation tree, nodes stored in parent-before-child order."""

    nodes: list[ThreadNode]
    by_id: dict[str, ThreadNode] = field(init=False, repr=False)

    def __post_init__(self):
        validate_thread(self.nodes)
        self.by_id = {n.id: n for n in self.nodes}

    @property
    def root(self) -> ThreadNode:
        return self.nodes[0]

    def parent_of(self, node: ThreadNode) -> ThreadNode | None:
        if node.parent_id is None:
            return None
        return self.by_id[node.parent_id]

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def validate_thread(nodes: list[ThreadNode]) -> None:
    """Check the tweet/comment/reply invariants over a node list.

    Requires unique ids, resolvable parents, no cycles, child depth equal
    to parent depth + 1, and parent-before-child ordering.
    """
    if not nodes:
        raise StructureError("thread has no nodes")
    seen: dict[str, ThreadNode] = {}
    for node in nodes:
        if node.id in seen:
            raise StructureError(f"duplicate node id {node.id!r} in thread")
        if node.parent_id is not None:
            parent = seen.get(node.parent_id)
            if parent is None:
                # Either an orphan or a forward reference; both break
                # parent-before-child order. Distinguish for the message.
                if any(n.id == node.parent_id for n in nodes):
                    raise StructureError(
                        f"node {node.id}: parent {node.parent_id!r} appears after child"
                    )
                raise StructureError(
                    f"node {node.id}: parent_id {node.parent_id!r} does not resolve"
                )
            if node.parent_id == node.id:
                raise StructureError(f"node {node.id}: cycle (self-parent)")
            if node.depth != parent.depth + 1:
                raise StructureError(
                    f"node {node.id}: depth {node.depth} != parent depth {parent.depth} + 1"
                )
        seen[node.id] = node


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()):
            raise ValidationError("class counts must be non-negative")
        if self.total != sum(self.counts.values()):
            raise ValidationError("distribution total must equal sum of counts")

    @classmethod
    def from_counts(cls, counts: dict[str, int]) -> "ClassDistribution":
        return cls(counts=dict(counts), total=sum(counts.values()))


def _sniff_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def load_flat_dataset(
    path: str | os.PathLike,
    language: str = "en",
    columns: dict[str, str | None] | None = None,
    require_labels: bool = True,
) -> list[LabeledExample]:
    """Load a delimited dataset file into LabeledExamples, preserving row order.

    `columns` maps the roles id/text/coarse/fine to column names; a role
    mapped to None is not loaded. The delimiter (comma or tab) is sniffed
    from the header line. With require_labels=False, label columns named
    in the schema may be missing from the file (prediction inputs).
    """
    import csv

    cols = dict(DEFAULT_COLUMNS) if columns is None else dict(columns)
    id_col = cols.get("id") or DEFAULT_COLUMNS["id"]
    text_col = cols.get("text") or DEFAULT_COLUMNS["text"]
    coarse_col = cols.get("coarse")
    fine_col = cols.get("fine")
    if require_labels and coarse_col is None and fine_col is None:
        raise SchemaError("schema must name at least one label column")

    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first:
            raise ValidationError(f"{path}: empty file")
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=_sniff_delimiter(first))
        header = reader.fieldnames or []
        for role, name in (("id", id_col), ("text", text_col)):
            if name not in header:
                raise SchemaError(f"{path}: missing {role} column {name!r}")
        for role, name in (("coarse", coarse_col), ("fine", fine_col)):
            if name is not None and name not in header:
                if require_labels:
                    raise SchemaError(f"{path}: missing {role} column {name!r}")
                if role == "coarse":
                    coarse_col = None
                else:
                    fine_col = None

        examples: list[LabeledExample] = []
        seen_ids: dict[str, int] = {}
        duplicates: list[str] = []
        for row_num, row in enumerate(reader, start=2):
            ex_id = (row.get(id_col) or "").strip()
            if not ex_id:
                raise ValidationError(f"{path} row {row_num}: empty id")
            if ex_id in seen_ids:
                duplicates.append(ex_id)
            seen_ids[ex_id] = row_num
            text = row.get(text_col) or ""
            try:
                coarse = canonical_label(row.get(coarse_col) or "", "coarse") if coarse_col else None
                fine = canonical_label(row.get(fine_col) or "", "fine") if fine_col else None
            except ValidationError as err:
                raise ValidationError(f"{path} row {row_num}: {err}") from None
            examples.append(
                LabeledExample(
                    id=ex_id, text=text, coarse_label=coarse,
                    fine_label=fine, language=language,
                )
            )
        if duplicates:
            raise ValidationError(f"{path}: duplicate ids {sorted(set(duplicates))}")
    return examples


def write_flat_dataset(
    path: str | os.PathLike,
    examples: list[LabeledExample],
    columns: dict[str, str | None] | None = None,
    delimiter: str = ",",
) -> None:
    """Write examples back to a delimited file; inverse of load_flat_dataset."""
    import csv

    cols = dict(DEFAULT_COLUMNS) if columns is None else dict(columns)
    id_col = cols.get("id") or DEFAULT_COLUMNS["id"]
    text_col = cols.get("text") or DEFAULT_COLUMNS["text"]
    coarse_col = cols.get("coarse")
    fine_col = cols.get("fine")
    header = [id_col, text_col]
    if coarse_col:
        header.append(coarse_col)
    if fine_col:
        header.append(fine_col)
    # RFC 4180 line endings: the writer then quotes embedded \r as well
    # as \n, so any text round-trips intact.
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow(header)
        for ex in examples:
            row = [ex.id, ex.text]
            if coarse_col:
                row.append(ex.coarse_label or "")
            if fine_col:
                row.append(ex.fine_label or "")
            writer.writerow(row)


def load_threads(path: str | os.PathLike) -> list[Thread]:
    """Load conversation trees from a JSON file.

    The file holds one object per tree (or a list of them):
    {"id":..., "text":..., "label":..., "comments":[{..., "replies":[...]}]}.
    Nodes are returned in parent-before-child order. Anything nested below
    a reply exceeds the tweet/comment/reply hierarchy and is rejected.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise StructureError(f"{path}: invalid JSON ({err})") from None
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise StructureError(f"{path}: expected a JSON object or array of thread objects")

    threads = []
    for tree in data:
        threads.append(Thread(nodes=_walk_tree(tree, path)))
    return threads


_CHILD_KEYS = ("comments", "replies")


def _walk_tree(obj: dict, path, parent: ThreadNode | None = None, depth: int = 0) -> list[ThreadNode]:
    if not isinstance(obj, dict):
        raise StructureError(f"{path}: thread node must be a JSON object")
    node_id = str(obj.get("id") or "").strip()
    if not node_id:
        raise StructureError(f"{path}: thread node missing id")
    label = obj.get("label")
    if label is not None:
        label = canonical_label(str(label), "coarse")
    node = ThreadNode(
        id=node_id,
        text=str(obj.get("text") or ""),
        label=label,
        parent_id=parent.id if parent else None,
        depth=depth,
    )
    nodes = [node]
    children = []
    for key in _CHILD_KEYS:
        children.extend(obj.get(key) or [])
    if children and depth >= MAX_THREAD_DEPTH:
        raise StructureError(
            f"{path}: node {node_id} at depth {depth} has children "
            f"(hierarchy is tweet/comment/reply only)"
        )
    for child in children:
        nodes.extend(_walk_tree(child, path, parent=node, depth=depth + 1))
    return nodes


def class_distribution(examples: list[LabeledExample], which: str = "coarse") -> ClassDistribution:
    """Count labels of the requested kind; every example must carry one."""
    if which not in ("coarse", "fine"):
        raise ValidationError(f"unknown label kind {which!r}")
    order = COARSE_LABELS if which == "coarse" else FINE_LABELS
    counts: dict[str, int] = {}
    for ex in examples:
        label = ex.label(which)
        if label is None:
            raise ValidationError(f"example {ex.id} missing {which} label")
        counts[label] = counts.get(label, 0) + 1
    ordered = {lab: counts[lab] for lab in order if lab in counts}
    return ClassDistribution.from_counts(ordered)


def thread_class_distribution(threads: list[Thread]) -> ClassDistribution:
    """Label counts over all labeled nodes of a thread collection."""
    counts: dict[str, int] = {}
    for thread in threads:
        for node in thread:
            if node.label is not None:
                counts[node.label] = counts.get(node.label, 0) + 1
    ordered = {lab: counts[lab] for lab in COARSE_LABELS if lab in counts}
    return ClassDistribution.from_counts(ordered)


def write_predictions(path: str | os.PathLike, predictions: dict[str, str]) -> None:
    """Write an `id,label` CSV, one row per prediction."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for ex_id, label in predictions.items():
            writer.writerow([ex_id, label])


def read_predictions(path: str | os.PathLike) -> dict[str, str]:
    import csv

    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or "id" not in reader.fieldnames or "label" not in reader.fieldnames:
            raise SchemaError(f"{path}: predictions file needs 'id' and 'label' columns")
        out: dict[str, str] = {}
        for row_num, row in enumerate(reader, start=2):
            ex_id = (row.get("id") or "").strip()
            if not ex_id:
                raise ValidationError(f"{path} row {row_num}: empty id")
            if ex_id in out:
                raise ValidationError(f"{path}: duplicate prediction id {ex_id!r}")
            out[ex_id] = (row.get("label") or "").strip()
    return out
