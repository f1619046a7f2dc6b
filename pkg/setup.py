# Builds the optional compiled kernels. The package works without them
# (a numpy fallback is selected at import time); set HATEKIT_SKIP_EXT=1
# to skip compilation entirely.
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("HATEKIT_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "hatekit.kernels._cnn_ext",
                    ["src/hatekit/kernels/_cnn_ext.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
