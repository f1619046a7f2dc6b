#!/usr/bin/env python3
"""Benchmark the compiled convolution kernels against the numpy fallback.

Times the forward+backward pair on workloads shaped like real training
(token counts and widths from the shipped task configs). Run with
`python benchmarks/bench_kernels.py`; use --quick for a fast pass.
"""

import argparse
import time

import numpy as np

from hatekit.kernels import available_backends

WORKLOADS = [
    # (name, T tokens, F filters, conv width, input width)
    ("toy_en  (T=16,  F=8,   w=3, W=128)", 16, 8, 3, 128),
    ("small   (T=32,  F=128, w=3, W=128)", 32, 128, 3, 128),
    ("xlmr_en (T=64,  F=128, w=4, W=3072)", 64, 128, 4, 3072),
    ("xlmr_hi (T=128, F=128, w=3, W=9216)", 128, 128, 3, 9216),
]


def bench_one(mod, T, F, w, W, budget_s):
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.normal(size=(T, W)))
    weights = np.ascontiguousarray(rng.normal(size=(F, w, W)))
    bias = np.ascontiguousarray(rng.normal(size=F))
    grad = np.ascontiguousarray(rng.normal(size=F))

    def once():
        pooled, best = mod.conv_relu_maxpool_forward(x, weights, bias)
        mod.conv_relu_maxpool_backward(x, w, np.asarray(best), np.asarray(pooled), grad)

    once()  # warm up
    start = time.perf_counter()
    repeats = 0
    while time.perf_counter() - start < budget_s or repeats < 3:
        once()
        repeats += 1
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="fewer repeats, small workloads only")
    args = parser.parse_args()

    backends = available_backends()
    if "cython" not in backends:
        print("note: compiled extension not built; run `python setup.py build_ext --inplace`")
    workloads = WORKLOADS[:2] if args.quick else WORKLOADS
    budget_s = 0.2 if args.quick else 1.0

    name_width = max(len(w[0]) for w in workloads)
    header = f"{'workload':<{name_width}}  " + "  ".join(f"{n:>12}" for n in backends)
    print(header)
    print("-" * len(header))
    for name, T, F, w, W in workloads:
        times = {n: bench_one(mod, T, F, w, W, budget_s) for n, mod in backends.items()}
        row = f"{name:<{name_width}}  " + "  ".join(
            f"{times[n] * 1e6:>10.1f}us" for n in backends
        )
        if len(times) > 1:
            ratio = times["python"] / times[max(times, key=lambda n: n != "python")]
            row += f"   ({ratio:.1f}x)" if "cython" in times else ""
        print(row)


if __name__ == "__main__":
    main()
