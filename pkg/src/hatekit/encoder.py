"""Uniform abstraction over sentence encoders.

A backend exposes an EncoderSpec and an encode() method returning
per-layer hidden states plus a pooled sentence vector. Real transformer
models attach as external adapters through register_backend(); the
bundled toy encoder is a deterministic test double so everything runs
without model weights.
"""

from __future__ import annotations

import hashlib
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DimensionError, ValidationError


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    num_layers: int
    hidden_dim: int
    max_tokens: int
    supports_pairs: bool

    def __post_init__(self):
        if min(self.num_layers, self.hidden_dim, self.max_tokens) <= 0:
            raise ValidationError("encoder dims must be positive")


@dataclass
class EncoderOutput:
    hidden_states: np.ndarray  # [num_layers, num_tokens, hidden_dim]
    pooled: np.ndarray  # [hidden_dim]
    token_count: int

    def __post_init__(self):
        hs = self.hidden_states
        if hs.ndim != 3 or hs.shape[0] < 1 or hs.shape[1] < 1:
            raise DimensionError(f"hidden_states must be [L>=1, T>=1, H], got {hs.shape}")
        if self.pooled.shape != (hs.shape[2],):
            raise DimensionError("pooled vector width must equal hidden_dim")
        if self.token_count != hs.shape[1]:
            raise DimensionError("token_count must match hidden_states")
        if not (np.isfinite(hs).all() and np.isfinite(self.pooled).all()):
            raise ValidationError("encoder output contains non-finite values")

    @property
    def num_layers(self) -> int:
        return self.hidden_states.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.hidden_states.shape[2]


def encode(backend, text_a: str, text_b: str | None = None) -> EncoderOutput:
    """Encode a single text or an ordered segment pair.

    The first segment is the text being classified; the second carries
    its context. Backends that do not declare pair support reject pairs.
    """
    if text_b is not None and not backend.spec.supports_pairs:
        raise CapabilityError(
            f"backend {backend.spec.name!r} does not support segment pairs"
        )
    return backend.encode(text_a, text_b)


def concat_last_k_layers(out: EncoderOutput, k: int) -> np.ndarray:
    """Per-token concatenation of the deepest k layers, final layer last."""
    L = out.num_layers
    if k < 1 or k > L:
        raise DimensionError(f"k={k} outside [1, {L}]")
    return np.concatenate([out.hidden_states[layer] for layer in range(L - k, L)], axis=1)


class ToyEncoder:
    """Deterministic hash-based encoder (L=4, H=32 by default).

    Each token's embedding row is drawn from a PRNG seeded by a digest of
    (seed, layer, segment, position, token), so outputs are reproducible
    across processes and platforms; values lie in [-1, 1]. Empty input
    encodes a single padding token.
    """

    def __init__(self, seed: int = 0, num_layers: int = 4, hidden_dim: int = 32,
                 max_tokens: int = 128):
        self.spec = EncoderSpec(
            name="toy",
            num_layers=num_layers,
            hidden_dim=hidden_dim,
            max_tokens=max_tokens,
            supports_pairs=True,
        )
        self.seed = seed
        self._row_cache: dict[tuple, np.ndarray] = {}

    def _row(self, token: str, layer: int, position: int, segment: int) -> np.ndarray:
        key = (token, layer, position, segment)
        row = self._row_cache.get(key)
        if row is None:
            material = f"{self.seed}\x1f{layer}\x1f{segment}\x1f{position}\x1f{token}"
            digest = hashlib.blake2b(material.encode("utf-8"), digest_size=8).digest()
            rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))
            row = rng.uniform(-1.0, 1.0, self.spec.hidden_dim)
            row.flags.writeable = False
            self._row_cache[key] = row
        return row

    def _truncate(self, tokens_a: list[str], tokens_b: list[str] | None):
        # Proportional tail truncation per segment: a long context can
        # never entirely evict the text being classified.
        limit = self.spec.max_tokens
        if tokens_b is None:
            return tokens_a[:limit], None
        total = len(tokens_a) + len(tokens_b)
        if total <= limit:
            return tokens_a, tokens_b
        budget_a = round(limit * len(tokens_a) / total)
        if tokens_a:
            budget_a = min(max(budget_a, 1), limit - (1 if tokens_b else 0))
        budget_b = limit - budget_a
        return tokens_a[:budget_a], tokens_b[:budget_b]

    def encode(self, text_a: str, text_b: str | None = None) -> EncoderOutput:
        tokens_a = text_a.split()
        tokens_b = text_b.split() if text_b is not None else None
        tokens_a, tokens_b = self._truncate(tokens_a, tokens_b)
        sequence = [(tok, 0) for tok in tokens_a]
        if tokens_b is not None:
            sequence.extend((tok, 1) for tok in tokens_b)
        if not sequence:
            sequence = [("", 0)]

        L, H = self.spec.num_layers, self.spec.hidden_dim
        hidden = np.empty((L, len(sequence), H), dtype=np.float64)
        for layer in range(L):
            for pos, (tok, seg) in enumerate(sequence):
                hidden[layer, pos] = self._row(tok, layer, pos, seg)
        return EncoderOutput(
            hidden_states=hidden,
            pooled=hidden[-1].mean(axis=0),
            token_count=len(sequence),
        )


class SerializedBackend:
    """Queueing adapter for backends that are not reentrant."""

    def __init__(self, backend):
        self._backend = backend
        self._lock = threading.Lock()

    @property
    def spec(self) -> EncoderSpec:
        return self._backend.spec

    def encode(self, text_a: str, text_b: str | None = None) -> EncoderOutput:
        with self._lock:
            return self._backend.encode(text_a, text_b)


def encode_batch(backend, items, workers: int = 1) -> list[EncoderOutput]:
    """Encode (text_a, text_b) pairs; results are order-stable."""
    if workers <= 1:
        return [encode(backend, a, b) for a, b in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: encode(backend, ab[0], ab[1]), items))


_BACKEND_FACTORIES = {
    "toy": lambda cfg: ToyEncoder(
        seed=int(cfg.get("seed", 0)),
        num_layers=int(cfg.get("num_layers", 4)),
        hidden_dim=int(cfg.get("hidden_dim", 32)),
        max_tokens=int(cfg.get("max_tokens", 128)),
    )
}


def register_backend(name: str, factory) -> None:
    """Register an external encoder adapter, e.g. a transformer wrapper."""
    _BACKEND_FACTORIES[name] = factory


def create_encoder(config: dict):
    name = config.get("name", "toy")
    factory = _BACKEND_FACTORIES.get(name)
    if factory is None:
        raise ValidationError(
            f"unknown encoder backend {name!r}; registered: {sorted(_BACKEND_FACTORIES)}"
        )
    return factory(config)
