"""Classification losses: cross-entropy, class-weighted CE, focal loss.

Focal loss scales cross-entropy by (1 - p_t)^gamma so well-classified
examples contribute less, which compensates for class imbalance; with
gamma=0 and no alpha it reduces exactly to cross-entropy. Probabilities
are clamped at 1e-12 before the log, never silently rescaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import ClassDistribution
from .errors import ValidationError

LOSS_KINDS = ("cross_entropy", "weighted_ce", "focal")

PROB_CLAMP = 1e-12
SIMPLEX_TOL = 1e-4


@dataclass(frozen=True)
class LossConfig:
    kind: str = "cross_entropy"
    class_weights: tuple[float, ...] | None = None
    gamma: float = 2.0
    alpha: tuple[float, ...] | float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValidationError(f"loss kind must be one of {LOSS_KINDS}")
        if self.class_weights is not None:
            object.__setattr__(self, "class_weights", tuple(float(w) for w in self.class_weights))
            if any(w <= 0 or not math.isfinite(w) for w in self.class_weights):
                raise ValidationError("class weights must be positive and finite")
        if not math.isfinite(self.gamma) or self.gamma < 0:
            raise ValidationError("gamma must be finite and >= 0")
        if isinstance(self.alpha, (list, tuple)):
            object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))


def _check_inputs(probs: np.ndarray, target: int, config: LossConfig) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValidationError(f"probs must be a vector, got shape {p.shape}")
    if not 0 <= target < p.shape[0]:
        raise IndexError(f"target {target} out of range for {p.shape[0]} classes")
    if abs(float(p.sum()) - 1.0) > SIMPLEX_TOL or float(p.min()) < -SIMPLEX_TOL:
        raise ValidationError(f"probs are off the simplex: sum={p.sum()}, min={p.min()}")
    if config.kind == "weighted_ce":
        if config.class_weights is None or len(config.class_weights) != p.shape[0]:
            raise ValidationError("weighted_ce needs class_weights of length num_classes")
    if config.kind == "focal" and isinstance(config.alpha, tuple):
        if len(config.alpha) != p.shape[0]:
            raise ValidationError("focal alpha vector must have length num_classes")
    return p


def _alpha_t(config: LossConfig, target: int) -> float:
    if config.alpha is None:
        return 1.0
    if isinstance(config.alpha, tuple):
        return config.alpha[target]
    return float(config.alpha)


def loss_value(probs, target: int, config: LossConfig) -> float:
    p = _check_inputs(probs, target, config)
    p_t = max(float(p[target]), PROB_CLAMP)
    nll = -math.log(p_t)
    if config.kind == "cross_entropy":
        return nll
    if config.kind == "weighted_ce":
        return config.class_weights[target] * nll
    focus = max(1.0 - p_t, 0.0) ** config.gamma
    return _alpha_t(config, target) * focus * nll


def loss_gradient(probs, target: int, config: LossConfig, wrt: str = "logits") -> np.ndarray:
    """Gradient of the loss w.r.t. probs, or w.r.t. logits when the probs
    came from a softmax (the composed form used in training)."""
    p = _check_inputs(probs, target, config)
    if wrt not in ("logits", "probs"):
        raise ValidationError("wrt must be 'logits' or 'probs'")
    p_t = max(float(p[target]), PROB_CLAMP)
    one_hot = np.zeros_like(p)
    one_hot[target] = 1.0

    if config.kind in ("cross_entropy", "weighted_ce"):
        w = config.class_weights[target] if config.kind == "weighted_ce" else 1.0
        if wrt == "logits":
            return w * (p - one_hot)
        grad = np.zeros_like(p)
        grad[target] = -w / p_t
        return grad

    # Focal: L = -alpha * (1 - p_t)^gamma * log(p_t); only dL/dp_t is nonzero.
    alpha = _alpha_t(config, target)
    gamma = config.gamma
    focus = max(1.0 - p_t, 0.0)
    if gamma == 0.0:
        dl_dpt = -alpha / p_t
    else:
        dl_dpt = alpha * (
            gamma * focus ** (gamma - 1.0) * math.log(p_t) - focus**gamma / p_t
        )
    if wrt == "probs":
        grad = np.zeros_like(p)
        grad[target] = dl_dpt
        return grad
    # Chain through the softmax Jacobian: dp_t/dz_j = p_t (1{j=t} - p_j).
    return dl_dpt * p_t * (one_hot - p)


def inverse_frequency_weights(
    distribution: ClassDistribution, class_order: tuple[str, ...] | None = None
) -> np.ndarray:
    """w_c = total / (num_classes * count_c), rescaled to mean 1.

    Rarer classes get proportionally larger weights. Zero-count classes
    are rejected; smooth the distribution before weighting if a class is
    absent from the training split.
    """
    order = tuple(class_order) if class_order is not None else tuple(sorted(distribution.counts))
    counts = []
    for label in order:
        c = distribution.counts.get(label, 0)
        if c <= 0:
            raise ValidationError(
                f"class {label!r} has zero count; smooth counts before weighting"
            )
        counts.append(c)
    counts_arr = np.asarray(counts, dtype=np.float64)
    weights = distribution.total / (len(order) * counts_arr)
    return weights / weights.mean()
