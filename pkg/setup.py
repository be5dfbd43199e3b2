import os

from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the NumPy
# implementations at import time when fedomg._kernels is absent.
# Set FEDOMG_SKIP_EXT=1 to install the pure-Python package only.
ext_modules = []
if os.environ.get("FEDOMG_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "fedomg._kernels",
                    sources=["src/fedomg/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
