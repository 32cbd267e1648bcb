"""Build script for the optional compiled particle-stepping kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes large particle simulations faster.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "wealthdyn._em",
                sources=["src/wealthdyn/_em.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
