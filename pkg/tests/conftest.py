import json

import pytest

from hatekit.corpus import LabeledExample, Thread, ThreadNode, write_flat_dataset


@pytest.fixture
def tmp_flat_file(tmp_path):
    """Write a small labeled dataset and return its path."""

    def make(rows, columns=None, delimiter=",", name="data.csv"):
        path = tmp_path / name
        if isinstance(rows[0], LabeledExample):
            write_flat_dataset(path, rows, columns=columns, delimiter=delimiter)
        else:
            header, *body = rows
            lines = [delimiter.join(header)] + [delimiter.join(r) for r in body]
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return make


@pytest.fixture
def tmp_threads_file(tmp_path):
    def make(trees, name="threads.json"):
        path = tmp_path / name
        path.write_text(json.dumps(trees, ensure_ascii=False), encoding="utf-8")
        return path

    return make


def make_chain_thread():
    """Root tweet, one comment, one reply."""
    return Thread(
        nodes=[
            ThreadNode(id="t1", text="root tweet", label="NOT", depth=0),
            ThreadNode(id="c1", text="a comment", label="HOF", parent_id="t1", depth=1),
            ThreadNode(id="r1", text="a reply", label="NOT", parent_id="c1", depth=2),
        ]
    )
