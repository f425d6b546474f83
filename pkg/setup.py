"""Build script for the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so the build is marked optional: environments without a C
toolchain still get a functional install.
"""
from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "qkdsim._kernels",
                sources=["src/qkdsim/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
