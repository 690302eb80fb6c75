"""Build the optional Cython kernel module.

If Cython or a C compiler is missing the package still installs and the
pure numpy kernels in ``rmtquench._pykernels`` are used instead.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RMTQUENCH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "rmtquench._ckernels",
                    ["src/rmtquench/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
