"""Numpy fallback for the convolution hot kernels.

Same contract as the compiled extension: a 1-D convolution over the
token axis followed by a rectifier and a global max-pool, plus the
matching backward pass. Ties in the max resolve to the first window,
matching np.argmax and the C loop.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_relu_maxpool_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray):
    """x [T, W], weights [F, w, W], bias [F] -> (pooled [F], best [F]).

    pooled[f] = max over windows of relu(conv); best[f] is the window
    index attaining the (pre-rectifier) max, kept for the backward pass.
    Caller guarantees T >= w.
    """
    F, w, W = weights.shape
    T = x.shape[0]
    S = T - w + 1
    windows = sliding_window_view(x, (w, W))[:, 0].reshape(S, w * W)
    pre = windows @ weights.reshape(F, w * W).T + bias  # [S, F]
    best = np.argmax(pre, axis=0)
    vals = pre[best, np.arange(F)]
    return np.maximum(vals, 0.0), best.astype(np.int64)


def conv_relu_maxpool_backward(
    x: np.ndarray,
    width: int,
    best: np.ndarray,
    pooled: np.ndarray,
    grad_pooled: np.ndarray,
):
    """Gradients w.r.t. weights and bias for the forward above.

    The rectifier gates the gradient: filters whose pooled value is zero
    receive none. Input gradients are not needed (encoders are frozen).
    """
    F = pooled.shape[0]
    W = x.shape[1]
    g = np.where(pooled > 0.0, grad_pooled, 0.0)
    idx = best[:, None] + np.arange(width)[None, :]  # [F, w]
    grad_weights = x[idx] * g[:, None, None]  # [F, w, W]
    return np.ascontiguousarray(grad_weights.reshape(F, width, W)), g.copy()
