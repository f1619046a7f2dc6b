# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled convolution hot kernels; contract mirrors kernels.pure."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def conv_relu_maxpool_forward(double[:, ::1] x, double[:, :, ::1] weights, double[::1] bias):
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t F = weights.shape[0]
    cdef Py_ssize_t w = weights.shape[1]
    cdef Py_ssize_t W = weights.shape[2]
    cdef Py_ssize_t S = T - w + 1
    cdef Py_ssize_t f, s, dt, i, best_s
    cdef double acc, best_val

    pooled_arr = np.empty(F, dtype=np.float64)
    best_arr = np.empty(F, dtype=np.int64)
    cdef double[::1] pooled = pooled_arr
    cdef long long[::1] best = best_arr

    for f in range(F):
        best_val = -np.inf
        best_s = 0
        for s in range(S):
            acc = bias[f]
            for dt in range(w):
                for i in range(W):
                    acc += weights[f, dt, i] * x[s + dt, i]
            if acc > best_val:
                best_val = acc
                best_s = s
        best[f] = best_s
        pooled[f] = best_val if best_val > 0.0 else 0.0
    return pooled_arr, best_arr


def conv_relu_maxpool_backward(double[:, ::1] x, Py_ssize_t width,
                               long long[::1] best, double[::1] pooled,
                               double[::1] grad_pooled):
    cdef Py_ssize_t F = pooled.shape[0]
    cdef Py_ssize_t W = x.shape[1]
    cdef Py_ssize_t f, dt, i, s
    cdef double g

    grad_w_arr = np.zeros((F, width, W), dtype=np.float64)
    grad_b_arr = np.zeros(F, dtype=np.float64)
    cdef double[:, :, ::1] grad_w = grad_w_arr
    cdef double[::1] grad_b = grad_b_arr

    for f in range(F):
        if pooled[f] <= 0.0:
            continue
        g = grad_pooled[f]
        grad_b[f] = g
        s = best[f]
        for dt in range(width):
            for i in range(W):
                grad_w[f, dt, i] = g * x[s + dt, i]
    return grad_w_arr, grad_b_arr
