"""Build script: compiles the optional Cython kernel extension.

The package works without the extension; thrillette.kernels falls back to
the pure-Python implementations if the compiled module is missing.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/thrillette/kernels/_ckernels.pyx"],
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
