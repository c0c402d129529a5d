"""Build the optional Cython kernel.

The package works without it: ``focalfield.kernels`` falls back to a numpy
implementation when ``focalfield._ckernels`` cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("FOCALFIELD_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "focalfield._ckernels",
                    ["src/focalfield/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("_GNU_SOURCE", None)],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
