"""Trainable classification heads over encoder outputs.

KimCnnHead: parallel 1-D convolutions of several widths over the token
axis, each rectified and globally max-pooled, concatenated into a dense
layer with dropout; the hand-crafted feature vector is concatenated
after that layer and a dense output layer produces softmax
probabilities. MlpHead: one linear layer over the pooled sentence
vector, then softmax.

Forward/backward on one parameter set is single-writer: each head
instance caches the intermediates of its latest forward. Concurrent
read-only forwards need one head instance per thread.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, StateError, ValidationError


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits)
    e = np.exp(z)
    return e / e.sum()


@dataclass(frozen=True)
class KimCnnConfig:
    input_width: int
    conv_widths: tuple[int, ...] = (2, 3, 4)
    filters_per_width: int = 128
    fc_dim: int = 128
    dropout: float = 0.5
    num_classes: int = 2
    feature_dim: int = 0

    def __post_init__(self):
        object.__setattr__(self, "conv_widths", tuple(self.conv_widths))
        if self.input_width <= 0:
            raise ValidationError("input_width must be positive")
        if not self.conv_widths or any(w < 1 for w in self.conv_widths):
            raise ValidationError("every conv width must be >= 1")
        if self.filters_per_width <= 0:
            raise ValidationError("filters_per_width must be positive")
        if self.fc_dim <= 0:
            raise ValidationError("fc_dim must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must be in [0, 1)")
        if self.num_classes < 2:
            raise ValidationError("num_classes must be >= 2")
        if self.feature_dim < 0:
            raise ValidationError("feature_dim must be >= 0")


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    num_classes: int

    def __post_init__(self):
        if self.input_dim <= 0:
            raise ValidationError("input_dim must be positive")
        if self.num_classes < 2:
            raise ValidationError("num_classes must be >= 2")


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, shape)


class KimCnnHead:
    def __init__(self, config: KimCnnConfig):
        self.config = config
        self._cache = None

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        cfg = self.config
        params: dict[str, np.ndarray] = {}
        for w in cfg.conv_widths:
            params[f"conv{w}_weight"] = _uniform(
                rng, (cfg.filters_per_width, w, cfg.input_width), w * cfg.input_width
            )
            params[f"conv{w}_bias"] = np.zeros(cfg.filters_per_width)
        pooled_dim = len(cfg.conv_widths) * cfg.filters_per_width
        params["fc_weight"] = _uniform(rng, (pooled_dim, cfg.fc_dim), pooled_dim)
        params["fc_bias"] = np.zeros(cfg.fc_dim)
        out_in = cfg.fc_dim + cfg.feature_dim
        params["out_weight"] = _uniform(rng, (out_in, cfg.num_classes), out_in)
        params["out_bias"] = np.zeros(cfg.num_classes)
        return params

    def forward(
        self,
        params: dict[str, np.ndarray],
        token_matrix: np.ndarray,
        features: np.ndarray | None = None,
        train_mode: bool = False,
        dropout_seed: int = 0,
    ) -> np.ndarray:
        cfg = self.config
        x = np.ascontiguousarray(token_matrix, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != cfg.input_width:
            raise DimensionError(
                f"token matrix must be [T, {cfg.input_width}], got {x.shape}"
            )
        if x.shape[0] < 1:
            raise DimensionError("token matrix needs at least one token row")
        if cfg.feature_dim:
            if features is None:
                raise DimensionError(f"head expects {cfg.feature_dim} features, got none")
            feats = np.asarray(features, dtype=np.float64)
            if feats.shape != (cfg.feature_dim,):
                raise DimensionError(
                    f"features must be [{cfg.feature_dim}], got {feats.shape}"
                )
        else:
            feats = np.zeros(0)

        # Short inputs are zero-padded up to the widest filter.
        w_max = max(cfg.conv_widths)
        if x.shape[0] < w_max:
            pad = np.zeros((w_max - x.shape[0], cfg.input_width))
            x = np.ascontiguousarray(np.vstack([x, pad]))

        pooled_parts, conv_cache = [], {}
        for w in cfg.conv_widths:
            pooled, best = kernels.conv_relu_maxpool_forward(
                x, params[f"conv{w}_weight"], params[f"conv{w}_bias"]
            )
            pooled_parts.append(pooled)
            conv_cache[w] = (pooled, best)
        pooled_all = np.concatenate(pooled_parts)

        pre_fc = pooled_all @ params["fc_weight"] + params["fc_bias"]
        hidden = np.maximum(pre_fc, 0.0)
        if train_mode and cfg.dropout > 0.0:
            rng = np.random.Generator(np.random.PCG64(dropout_seed))
            mask = (rng.random(cfg.fc_dim) >= cfg.dropout) / (1.0 - cfg.dropout)
        else:
            mask = None
        dropped = hidden * mask if mask is not None else hidden

        fused = np.concatenate([dropped, feats])
        logits = fused @ params["out_weight"] + params["out_bias"]
        probs = softmax(logits)
        self._cache = {
            "x": x,
            "conv": conv_cache,
            "pooled_all": pooled_all,
            "pre_fc": pre_fc,
            "mask": mask,
            "fused": fused,
        }
        return probs

    def backward(self, params: dict[str, np.ndarray], grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients given the loss gradient w.r.t. the logits."""
        if self._cache is None:
            raise StateError("backward called without a matching forward")
        cfg = self.config
        cache = self._cache
        g_logits = np.asarray(grad_logits, dtype=np.float64)

        grads: dict[str, np.ndarray] = {}
        grads["out_weight"] = np.outer(cache["fused"], g_logits)
        grads["out_bias"] = g_logits.copy()
        g_fused = params["out_weight"] @ g_logits

        g_dropped = g_fused[: cfg.fc_dim]  # feature slice carries no parameters
        g_hidden = g_dropped * cache["mask"] if cache["mask"] is not None else g_dropped
        g_pre_fc = g_hidden * (cache["pre_fc"] > 0.0)

        grads["fc_weight"] = np.outer(cache["pooled_all"], g_pre_fc)
        grads["fc_bias"] = g_pre_fc.copy()
        g_pooled_all = params["fc_weight"] @ g_pre_fc

        offset = 0
        for w in cfg.conv_widths:
            pooled, best = cache["conv"][w]
            g_slice = np.ascontiguousarray(
                g_pooled_all[offset : offset + cfg.filters_per_width]
            )
            gw, gb = kernels.conv_relu_maxpool_backward(
                cache["x"], w, best, pooled, g_slice
            )
            grads[f"conv{w}_weight"] = gw
            grads[f"conv{w}_bias"] = gb
            offset += cfg.filters_per_width
        return grads


class MlpHead:
    def __init__(self, config: MlpConfig):
        self.config = config
        self._cache = None

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        cfg = self.config
        return {
            "weight": _uniform(rng, (cfg.input_dim, cfg.num_classes), cfg.input_dim),
            "bias": np.zeros(cfg.num_classes),
        }

    def forward(
        self,
        params: dict[str, np.ndarray],
        pooled: np.ndarray,
        features: np.ndarray | None = None,
        train_mode: bool = False,
        dropout_seed: int = 0,
    ) -> np.ndarray:
        del features, train_mode, dropout_seed  # uniform call signature with the CNN head
        x = np.asarray(pooled, dtype=np.float64)
        if x.shape != (self.config.input_dim,):
            raise DimensionError(
                f"pooled vector must be [{self.config.input_dim}], got {x.shape}"
            )
        if not np.isfinite(x).all():
            raise ValidationError("pooled vector contains non-finite values")
        logits = x @ params["weight"] + params["bias"]
        probs = softmax(logits)
        self._cache = {"x": x}
        return probs

    def backward(self, params: dict[str, np.ndarray], grad_logits: np.ndarray) -> dict[str, np.ndarray]:
        if self._cache is None:
            raise StateError("backward called without a matching forward")
        g = np.asarray(grad_logits, dtype=np.float64)
        return {"weight": np.outer(self._cache["x"], g), "bias": g.copy()}


def save_checkpoint(path, params: dict[str, np.ndarray], config, extra: dict | None = None) -> None:
    """Write named parameter slices plus the head config; bit-exact round trip."""
    kind = "kim_cnn" if isinstance(config, KimCnnConfig) else "mlp"
    meta = {"kind": kind, "config": asdict(config), "extra": extra or {}}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8), **params)


def load_checkpoint(path):
    """Returns (params, config, extra) as saved by save_checkpoint."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
        params = {k: data[k].copy() for k in data.files if k != "__meta__"}
    cfg_cls = KimCnnConfig if meta["kind"] == "kim_cnn" else MlpConfig
    raw = dict(meta["config"])
    if "conv_widths" in raw:
        raw["conv_widths"] = tuple(raw["conv_widths"])
    return params, cfg_cls(**raw), meta["extra"]
