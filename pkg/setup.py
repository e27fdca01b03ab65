"""Build the optional Cython kernels.

The package works without them: ``cmlimit.kernels`` falls back to the
numpy implementation when the extension cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("CMLIMIT_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "cmlimit._ckernels",
                ["src/cmlimit/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
