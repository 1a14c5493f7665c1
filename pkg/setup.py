import os

from setuptools import Extension, setup

# The compiled kernels are optional: without Cython (or with
# THREADCAST_NO_EXT=1) the package installs pure-Python and selects the
# fallback implementations at import time.
ext_modules = []
if os.environ.get("THREADCAST_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "threadcast._kernels._speedups",
                    ["src/threadcast/_kernels/_speedups.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
