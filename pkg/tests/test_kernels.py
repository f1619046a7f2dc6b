"""Parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from hatekit import kernels


def _random_case(rng, T, F, w, W):
    x = np.ascontiguousarray(rng.normal(size=(T, W)))
    weights = np.ascontiguousarray(rng.normal(size=(F, w, W)))
    bias = np.ascontiguousarray(rng.normal(size=F))
    grad = np.ascontiguousarray(rng.normal(size=F))
    return x, weights, bias, grad


def test_backend_selected():
    assert kernels.backend_name in ("cython", "python")
    assert "python" in kernels.available_backends()


@pytest.mark.parametrize("T,F,w,W", [(1, 1, 1, 1), (3, 2, 3, 4), (10, 5, 2, 16), (6, 8, 6, 3)])
def test_backend_parity(T, F, w, W):
    rng = np.random.default_rng(42 + T + F)
    x, weights, bias, grad = _random_case(rng, T, F, w, W)
    results = []
    for mod in kernels.available_backends().values():
        pooled, best = mod.conv_relu_maxpool_forward(x, weights, bias)
        gw, gb = mod.conv_relu_maxpool_backward(x, w, np.asarray(best), np.asarray(pooled), grad)
        results.append((np.asarray(pooled), np.asarray(best), np.asarray(gw), np.asarray(gb)))
    ref = results[0]
    for other in results[1:]:
        assert np.allclose(ref[0], other[0], atol=1e-12)
        assert np.array_equal(ref[1], other[1])
        assert np.allclose(ref[2], other[2], atol=1e-12)
        assert np.allclose(ref[3], other[3], atol=1e-12)


def test_tie_breaks_to_first_window():
    # Two identical windows: both implementations must pick index 0.
    x = np.ascontiguousarray(np.tile(np.arange(4.0), (5, 1)))
    weights = np.ascontiguousarray(np.ones((2, 2, 4)))
    bias = np.zeros(2)
    for mod in kernels.available_backends().values():
        _, best = mod.conv_relu_maxpool_forward(x, weights, bias)
        assert np.asarray(best).tolist() == [0, 0]


def test_relu_gates_gradient():
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.normal(size=(4, 3)))
    weights = np.ascontiguousarray(np.zeros((2, 2, 3)))
    bias = np.array([-1.0, -2.0])  # conv output strictly negative
    grad = np.ones(2)
    for mod in kernels.available_backends().values():
        pooled, best = mod.conv_relu_maxpool_forward(x, weights, bias)
        assert np.asarray(pooled).tolist() == [0.0, 0.0]
        gw, gb = mod.conv_relu_maxpool_backward(x, 2, np.asarray(best), np.asarray(pooled), grad)
        assert not np.asarray(gw).any() and not np.asarray(gb).any()
