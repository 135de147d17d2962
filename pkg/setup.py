"""Builds the optional compiled kernels.

The package is fully functional without the extension (a pure-Python
backend is selected at import time); set PAGE_SKIP_EXT=1 to skip the
build on machines without a C++ toolchain.
"""

import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("PAGE_SKIP_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "page.kernels._ckernels",
                sources=["src/page/kernels/_ckernels.pyx"],
                language="c++",
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
