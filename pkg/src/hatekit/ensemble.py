"""Combine predictions across models and folds.

Two modes: majority voting over per-member argmax labels (odd member
counts by construction) and soft averaging of member probability
vectors before the argmax.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError

ENSEMBLE_MODES = ("majority_vote", "soft_average")
TIE_BREAKS = ("soft_average_fallback", "lowest_class_index")


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple[str, ...]
    mode: str = "soft_average"
    tie_break: str = "soft_average_fallback"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValidationError("ensemble needs at least one member")
        if self.mode not in ENSEMBLE_MODES:
            raise ValidationError(f"mode must be one of {ENSEMBLE_MODES}")
        if self.tie_break not in TIE_BREAKS:
            raise ValidationError(f"tie_break must be one of {TIE_BREAKS}")
        if self.mode == "majority_vote" and len(self.members) % 2 == 0:
            raise ValidationError("majority voting requires an odd number of members")


def majority_vote(
    labels: Sequence[int],
    tie_break: str = "soft_average_fallback",
    probs: Sequence[np.ndarray] | None = None,
) -> int:
    """Modal label; the result is always one of the input labels.

    Ties among modal labels resolve by the highest averaged probability
    over the tied candidates when member probs are supplied, then by
    lowest class index.
    """
    if not labels:
        raise ValidationError("majority_vote needs at least one label")
    if tie_break not in TIE_BREAKS:
        raise ValidationError(f"tie_break must be one of {TIE_BREAKS}")
    counts = Counter(labels)
    top = max(counts.values())
    tied = sorted(label for label, c in counts.items() if c == top)
    if len(tied) == 1:
        return tied[0]
    if tie_break == "soft_average_fallback" and probs is not None:
        avg = soft_average(probs)
        ranked = sorted(tied, key=lambda lab: (-avg[lab], lab))
        return ranked[0]
    return tied[0]


def soft_average(prob_vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mean of probability vectors; stays on the simplex.

    Each coordinate is summed with math.fsum, which rounds exactly, so
    the result is bit-identical under any permutation of the members.
    """
    if not prob_vectors:
        raise ValidationError("soft_average needs at least one vector")
    arrays = [np.asarray(v, dtype=np.float64) for v in prob_vectors]
    width = arrays[0].shape
    if any(a.shape != width for a in arrays):
        raise ValidationError(f"probability vectors disagree on length: {[a.shape for a in arrays]}")
    n = len(arrays)
    return np.array([math.fsum(a[i] for a in arrays) / n for i in range(width[0])])


def ensemble_predict(
    spec: EnsembleSpec, member_probs: Sequence[Mapping[str, np.ndarray]]
) -> dict[str, int]:
    """Per-id label from member probability maps, per the spec's mode."""
    if len(member_probs) != len(spec.members):
        raise ValidationError(
            f"spec names {len(spec.members)} members but {len(member_probs)} maps given"
        )
    ids = set(member_probs[0])
    for m in member_probs[1:]:
        if set(m) != ids:
            diff = sorted(ids.symmetric_difference(set(m)))
            raise ValidationError(f"members disagree on ids: {diff[:10]}")

    out: dict[str, int] = {}
    for ex_id in member_probs[0]:
        vectors = [np.asarray(m[ex_id], dtype=np.float64) for m in member_probs]
        if spec.mode == "soft_average":
            out[ex_id] = int(np.argmax(soft_average(vectors)))
        else:
            votes = [int(np.argmax(v)) for v in vectors]
            out[ex_id] = majority_vote(votes, spec.tie_break, probs=vectors)
    return out
