"""Convolution hot kernels: compiled core with a numpy fallback.

The compiled extension is picked at import time when present; set
HATEKIT_KERNELS=python to force the fallback (used by the benchmark
and the parity tests). Both implementations share one contract.
"""

import os

from . import pure

try:
    from . import _cnn_ext
except ImportError:
    _cnn_ext = None

if _cnn_ext is not None and os.environ.get("HATEKIT_KERNELS", "").lower() != "python":
    _impl = _cnn_ext
    backend_name = "cython"
else:
    _impl = pure
    backend_name = "python"

conv_relu_maxpool_forward = _impl.conv_relu_maxpool_forward
conv_relu_maxpool_backward = _impl.conv_relu_maxpool_backward


def available_backends() -> dict:
    """Name -> module for every kernel implementation importable here."""
    backends = {"python": pure}
    if _cnn_ext is not None:
        backends["cython"] = _cnn_ext
    return backends
