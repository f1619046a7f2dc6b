"""Hand-crafted textual features fused into the classifier heads.

Punctuation/capitalization fractions come from the raw (pre-lowercase)
text; the profanity fraction from cleaned tokens; sentiment from a
caller-supplied hook so the suite runs fully offline.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import LoadError, SchemaError, ValidationError
from .preprocess import normalize_indic_script

SUPPORTED_FEATURES = (
    "q_mark_frac",
    "excl_frac",
    "capital_frac",
    "profanity_frac",
    "sent_neg",
    "sent_neu",
    "sent_pos",
)

_FRACTION_FEATURES = frozenset(SUPPORTED_FEATURES)

UNIFORM_SENTIMENT = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema: tuple[str, ...]

    def __post_init__(self):
        if len(self.values) != len(self.schema):
            raise ValidationError(
                f"feature vector has {len(self.values)} values for {len(self.schema)} names"
            )
        for name, v in zip(self.schema, self.values):
            if not math.isfinite(v):
                raise ValidationError(f"feature {name} is not finite: {v!r}")
            if name in _FRACTION_FEATURES and not -1e-9 <= v <= 1.0 + 1e-9:
                raise ValidationError(f"feature {name}={v} outside [0, 1]")
        sent = {"sent_neg", "sent_neu", "sent_pos"}
        if sent <= set(self.schema):
            total = sum(v for n, v in zip(self.schema, self.values) if n in sent)
            if abs(total - 1.0) > 1e-6:
                raise ValidationError(f"sentiment triple sums to {total}, expected 1")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class ProfanityLexicon:
    words: frozenset[str]
    source_names: tuple[str, ...] = ()

    def __post_init__(self):
        for w in self.words:
            if not w:
                raise ValidationError("lexicon contains an empty string")
            if w != w.lower():
                raise ValidationError(f"lexicon entry {w!r} is not lowercase")

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)


EMPTY_LEXICON = ProfanityLexicon(words=frozenset())


@dataclass
class SentimentStats:
    failures: int = 0


def load_lexicon(paths: Sequence[str]) -> ProfanityLexicon:
    """Union of one-word-per-line files; `#` lines are comments.

    Entries are lowercased and script-normalized so they match cleaned
    tokens exactly.
    """
    words: set[str] = set()
    names: list[str] = []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as err:
            raise LoadError(f"cannot read lexicon file {path}: {err}") from None
        names.append(str(path))
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.add(normalize_indic_script(line.lower()))
    return ProfanityLexicon(words=frozenset(words), source_names=tuple(names))


def punctuation_and_case_features(raw_text: str) -> FeatureVector:
    """Per-character fractions of '?', '!' and capital letters.

    Must see the raw text: cleaning removes punctuation and case before
    the encoder ever runs.
    """
    schema = ("q_mark_frac", "excl_frac", "capital_frac")
    n_chars = len(raw_text)
    letters = [ch for ch in raw_text if ch.isalpha()]
    q = raw_text.count("?") / n_chars if n_chars else 0.0
    e = raw_text.count("!") / n_chars if n_chars else 0.0
    cap = sum(1 for ch in letters if ch.isupper()) / len(letters) if letters else 0.0
    return FeatureVector(values=(q, e, cap), schema=schema)


def profanity_fraction(tokens: Sequence[str], lexicon: ProfanityLexicon) -> float:
    """Fraction of tokens found in the lexicon; 0 for empty input."""
    if not tokens:
        return 0.0
    return sum(1 for t in tokens if t in lexicon) / len(tokens)


def sentiment_features(
    text: str,
    provider: Callable[[str], Iterable[float]] | None = None,
    stats: SentimentStats | None = None,
) -> tuple[float, float, float]:
    """(negative, neutral, positive) scores from the provider hook.

    The default provider is the constant uniform distribution. Outputs
    are renormalized to sum 1; failures and non-finite or non-positive
    outputs fall back to uniform and bump the failure count.
    """
    if provider is None:
        return UNIFORM_SENTIMENT
    try:
        raw = tuple(float(v) for v in provider(text))
        if len(raw) != 3:
            raise ValueError(f"sentiment provider returned {len(raw)} values")
        if any(not math.isfinite(v) or v < 0 for v in raw):
            raise ValueError("sentiment provider returned invalid scores")
        total = sum(raw)
        if total <= 0:
            raise ValueError("sentiment scores sum to zero")
    except Exception:
        if stats is not None:
            stats.failures += 1
        return UNIFORM_SENTIMENT
    return (raw[0] / total, raw[1] / total, raw[2] / total)


def serialized_provider(provider: Callable[[str], Iterable[float]]):
    """Wrap a non-reentrant sentiment provider behind a lock."""
    lock = threading.Lock()

    def call(text: str):
        with lock:
            return provider(text)

    return call


def build_feature_vector(
    raw_text: str,
    clean_tokens: Sequence[str],
    lexicon: ProfanityLexicon = EMPTY_LEXICON,
    provider: Callable[[str], Iterable[float]] | None = None,
    schema: Sequence[str] = SUPPORTED_FEATURES,
    stats: SentimentStats | None = None,
) -> FeatureVector:
    """Assemble the feature values in exactly the order `schema` names them."""
    unknown = [name for name in schema if name not in SUPPORTED_FEATURES]
    if unknown:
        raise SchemaError(f"unknown feature names {unknown}; supported: {list(SUPPORTED_FEATURES)}")

    needed = set(schema)
    values: dict[str, float] = {}
    if needed & {"q_mark_frac", "excl_frac", "capital_frac"}:
        pc = punctuation_and_case_features(raw_text)
        values.update(zip(pc.schema, pc.values))
    if "profanity_frac" in needed:
        values["profanity_frac"] = profanity_fraction(clean_tokens, lexicon)
    if needed & {"sent_neg", "sent_neu", "sent_pos"}:
        neg, neu, pos = sentiment_features(raw_text, provider, stats=stats)
        values.update(sent_neg=neg, sent_neu=neu, sent_pos=pos)

    return FeatureVector(
        values=tuple(values[name] for name in schema), schema=tuple(schema)
    )
