"""Build the optional compiled CDCL core.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and ``dsaudit.sat`` falls back to the pure
Python solver.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("DSAUDIT_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dsaudit.sat._cdcl",
                    ["src/dsaudit/sat/_cdcl.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
