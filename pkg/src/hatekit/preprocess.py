"""Deterministic text cleaning for code-mixed tweets.

The pipeline order is fixed: URLs -> mentions -> hashtags -> emoji ->
transliteration -> script normalization -> punctuation -> lowercasing ->
stopwords -> whitespace collapse. Removals substitute a space so that
deleting one token can never splice two neighbours into a new match,
which keeps the whole pipeline idempotent.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from importlib import resources
from typing import Callable

from .errors import ValidationError

EMOJI_MODES = ("strip", "to_text", "keep")

URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
MENTION_RE = re.compile(r"@+\w+")
HASHTAG_RE = re.compile(r"#+\w+")
HASHTAG_TEXT_RE = re.compile(r"#+(\w+)")
_WS_RE = re.compile(r"\s+")

# Codepoint blocks treated as emoji beyond the named table.
EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x27BF),
    (0x2B00, 0x2BFF),
)

# Presentation selectors, ZWJ and skin tone modifiers: dropped silently in
# strip/to_text modes, never counted as unknown emoji.
_EMOJI_JOINERS = frozenset(
    [0x200D, 0x20E3, *range(0xFE00, 0xFE10), *range(0x1F3FB, 0x1F400)]
)

_ZERO_WIDTH = dict.fromkeys([0x200B, 0x200C, 0x200D, 0x2060, 0xFEFF, 0xFFFE, 0x00AD])

# Known visually-identical Devanagari variants not covered by NFC alone,
# e.g. the combining candrabindu used in place of the Devanagari sign.
_DEVANAGARI_VARIANTS = {0x0310: 0x0901}


@dataclass
class CleanStats:
    """Tallies collected while cleaning; never raised as errors."""

    unknown_emoji: int = 0
    transliteration_failures: int = 0

    def merge(self, other: "CleanStats") -> None:
        self.unknown_emoji += other.unknown_emoji
        self.transliteration_failures += other.transliteration_failures


@dataclass(frozen=True)
class PreprocessConfig:
    remove_urls: bool = True
    remove_mentions: bool = True
    remove_hashtags: bool = True
    hashtag_keep_text: bool = False
    remove_punctuation: bool = True
    emoji_mode: str = "strip"
    normalize_indic: bool = True
    remove_stopwords: bool = False
    stopword_list: frozenset[str] = frozenset()
    transliterate_roman_hindi: bool = False
    lowercase_roman: bool = True

    def __post_init__(self):
        if self.emoji_mode not in EMOJI_MODES:
            raise ValidationError(f"emoji_mode must be one of {EMOJI_MODES}")
        if self.remove_stopwords and not self.stopword_list:
            raise ValidationError("remove_stopwords=True requires a non-empty stopword_list")


def _load_emoji_table() -> dict[str, str]:
    table: dict[str, str] = {}
    text = resources.files("hatekit.data").joinpath("emoji_names.tsv").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cp, name = line.split("\t")
        table[chr(int(cp, 16))] = name
    return table


_EMOJI_TABLE: dict[str, str] | None = None


def emoji_table() -> dict[str, str]:
    """The bundled codepoint -> name table, loaded once."""
    global _EMOJI_TABLE
    if _EMOJI_TABLE is None:
        _EMOJI_TABLE = _load_emoji_table()
    return _EMOJI_TABLE


def is_emoji_char(ch: str, table: dict[str, str] | None = None) -> bool:
    if ch in (table if table is not None else emoji_table()):
        return True
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in EMOJI_RANGES)


def load_stopwords(path) -> frozenset[str]:
    """Read a one-token-per-line stopword file (stopwords-iso layout)."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            normalize_indic_script(line.strip()) for line in fh if line.strip()
        )


def marathi_stopwords() -> frozenset[str]:
    text = resources.files("hatekit.data").joinpath("stopwords_mr.txt").read_text("utf-8")
    return frozenset(
        normalize_indic_script(line.strip()) for line in text.splitlines() if line.strip()
    )


def normalize_indic_script(text: str) -> str:
    """Canonicalize Devanagari codepoint sequences; Roman text passes through.

    NFC maps precomposed and decomposed nukta forms to one sequence and
    fixes combining-mark order; zero-width formatting characters are
    dropped and a small table patches known variant codepoints.
    """
    s = unicodedata.normalize("NFC", text)
    s = s.translate(_ZERO_WIDTH)
    s = s.translate(_DEVANAGARI_VARIANTS)
    return unicodedata.normalize("NFC", s)


def apply_emoji_mode(
    text: str,
    mode: str,
    table: dict[str, str] | None = None,
    stats: CleanStats | None = None,
) -> str:
    """Strip emoji, spell them out as :name: tokens, or keep them.

    to_text replaces table emoji by their name token; emoji outside the
    table are dropped and tallied in `stats`. keep returns the input
    unchanged; strip and to_text collapse the whitespace they create.
    """
    if mode not in EMOJI_MODES:
        raise ValidationError(f"emoji_mode must be one of {EMOJI_MODES}")
    if mode == "keep":
        return text
    table = table if table is not None else emoji_table()
    out: list[str] = []
    for ch in text:
        if ch in table:
            out.append(f" :{table[ch]}: " if mode == "to_text" else " ")
            continue
        if ord(ch) in _EMOJI_JOINERS:
            out.append(" ")
            continue
        if is_emoji_char(ch, table):
            if mode == "to_text" and stats is not None:
                stats.unknown_emoji += 1
            out.append(" ")
            continue
        out.append(ch)
    return _WS_RE.sub(" ", "".join(out)).strip()


def transliterate_roman_hindi(
    text: str,
    backend: Callable[[str], str] | None = None,
    stats: CleanStats | None = None,
) -> str:
    """Run the caller-supplied Roman->Devanagari hook; identity by default.

    Backend failures fall back to the original text and are tallied.
    """
    if backend is None:
        return text
    try:
        out = backend(text)
        if not isinstance(out, str):
            raise TypeError(f"transliteration backend returned {type(out).__name__}")
    except Exception:
        if stats is not None:
            stats.transliteration_failures += 1
        return text
    return out


def remove_stopwords(tokens: list[str], stopwords: frozenset[str] | set[str]) -> list[str]:
    """Drop exact-match stopword tokens, preserving the order of survivors."""
    if not stopwords:
        return list(tokens)
    return [t for t in tokens if t not in stopwords]


def _remove_punctuation(text: str) -> str:
    out = []
    for ch in text:
        out.append(" " if unicodedata.category(ch).startswith("P") else ch)
    return "".join(out)


def _lowercase_roman(text: str) -> str:
    # str.lower is the identity on Devanagari (no case distinction).
    return text.lower()


def tokenize(text: str) -> list[str]:
    """Unicode-whitespace tokenization used for features and stopwords."""
    return text.split()


def clean_text(
    text: str,
    config: PreprocessConfig | None = None,
    transliterator: Callable[[str], str] | None = None,
    stats: CleanStats | None = None,
) -> str:
    """Apply the full cleaning pipeline for one tweet.

    Pure and idempotent for any config with the default (identity)
    transliteration hook; degenerate inputs yield the empty string.
    """
    cfg = config or PreprocessConfig()
    s = text
    if cfg.remove_urls:
        s = URL_RE.sub(" ", s)
    if cfg.remove_mentions:
        s = MENTION_RE.sub(" ", s)
    if cfg.remove_hashtags:
        if cfg.hashtag_keep_text:
            s = HASHTAG_TEXT_RE.sub(r"\1", s)
        else:
            s = HASHTAG_RE.sub(" ", s)
    s = apply_emoji_mode(s, cfg.emoji_mode, stats=stats)
    if cfg.transliterate_roman_hindi:
        s = transliterate_roman_hindi(s, transliterator, stats=stats)
    if cfg.normalize_indic:
        s = normalize_indic_script(s)
    if cfg.remove_punctuation:
        s = _remove_punctuation(s)
    if cfg.lowercase_roman:
        s = _lowercase_roman(s)
    if cfg.remove_stopwords:
        s = " ".join(remove_stopwords(tokenize(s), cfg.stopword_list))
    return _WS_RE.sub(" ", s).strip()


def default_config(task: str) -> PreprocessConfig:
    """Shipped per-task presets.

    Detection tasks strip emoji; hate-characterization tasks spell them
    out, which captures sentiment hints useful for the fine labels.
    Marathi additionally removes stopwords; the code-mixed thread task
    enables the transliteration hook (identity unless one is wired in).
    """
    if task in ("en_a", "hi_a"):
        return PreprocessConfig(emoji_mode="strip")
    if task in ("en_b", "hi_b"):
        return PreprocessConfig(emoji_mode="to_text")
    if task == "mr_a":
        return PreprocessConfig(
            emoji_mode="strip", remove_stopwords=True, stopword_list=marathi_stopwords()
        )
    if task == "ichcl":
        return PreprocessConfig(emoji_mode="strip", transliterate_roman_hindi=True)
    raise ValidationError(f"unknown task {task!r}")
