"""Builds the optional compiled kernel extension.

The package works without it: soundtrail._kernels falls back to the pure
numpy implementations when the extension is missing or fails to build.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "soundtrail._kernels._kernels_cy",
                ["src/soundtrail/_kernels/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
