"""Synthetic datasets for demos and end-to-end checks.

Each class carries a dedicated marker token, repeated so the signal
survives max-pooling, mixed with shared filler so the task is not
degenerate. With the hash-based toy encoder this is linearly separable.
"""

from __future__ import annotations

import numpy as np

from .corpus import COARSE_LABELS, LabeledExample


def make_separable_dataset(
    n: int = 500, num_classes: int = 2, seed: int = 0, language: str = "en"
) -> list[LabeledExample]:
    if num_classes != len(COARSE_LABELS):
        raise ValueError("only the 2-class coarse label scheme is supported")
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        cls = i % num_classes
        filler = [f"filler{int(rng.integers(0, 6))}" for _ in range(3)]
        tokens = [f"marker{cls}"] + filler[:2] + [f"marker{cls}"] + filler[2:]
        examples.append(
            LabeledExample(
                id=f"syn{i:05d}",
                text=" ".join(tokens),
                coarse_label=COARSE_LABELS[cls],
                language=language,
            )
        )
    return examples
