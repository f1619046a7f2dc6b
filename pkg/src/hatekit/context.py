"""Pair each conversation-thread node with its conversational context.

A standalone tweet gets an empty context; a comment gets the root
tweet; a reply gets the root tweet followed by the comment. The target
segment always comes first when the pair is fed to an encoder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .corpus import MAX_THREAD_DEPTH, Thread, ThreadNode
from .errors import StructureError

DEFAULT_SEPARATOR = " "


@dataclass(frozen=True)
class ContextualInput:
    target_text: str
    context_text: str
    node_id: str
    depth: int

    def __post_init__(self):
        if self.depth < 0 or self.depth > MAX_THREAD_DEPTH:
            raise StructureError(f"node {self.node_id}: depth {self.depth} out of range")
        if self.depth == 0 and self.context_text:
            raise StructureError(f"node {self.node_id}: root inputs must have empty context")

    def as_pair(self) -> tuple[str, str | None]:
        """(text_a, text_b) for encoder.encode; empty context maps to None."""
        return self.target_text, (self.context_text or None)


def build_contextual_input(
    node: ThreadNode,
    thread: Thread,
    cleaner: Callable[[str], str] | None = None,
    separator: str = DEFAULT_SEPARATOR,
) -> ContextualInput:
    """Target text plus context for one node; texts are cleaned first."""
    if node.id not in thread.by_id:
        raise StructureError(f"node {node.id} does not belong to the given thread")
    clean = cleaner if cleaner is not None else (lambda s: s)

    if node.depth == 0:
        context = ""
    elif node.depth == 1:
        context = clean(thread.root.text)
    elif node.depth == 2:
        comment = thread.parent_of(node)
        context = clean(thread.root.text) + separator + clean(comment.text)
    else:
        raise StructureError(f"node {node.id}: depth {node.depth} exceeds reply level")

    return ContextualInput(
        target_text=clean(node.text),
        context_text=context,
        node_id=node.id,
        depth=node.depth,
    )


def flatten_threads(
    threads: list[Thread],
    cleaner: Callable[[str], str] | None = None,
    separator: str = DEFAULT_SEPARATOR,
) -> list[ContextualInput]:
    """One ContextualInput per node, parent before child, order-stable."""
    out: list[ContextualInput] = []
    for thread in threads:
        for node in thread:
            out.append(build_contextual_input(node, thread, cleaner, separator))
    return out
