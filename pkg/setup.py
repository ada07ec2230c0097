"""Build script: compiles the optional Cython kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any compilation failure downgrades to a pure
Python install instead of aborting.
"""
import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; warn and continue if not."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        sys.stderr.write(
            "warning: pointspec._kernels failed to build (%s); "
            "falling back to the pure numpy backend\n" % exc
        )


def extensions():
    if os.environ.get("POINTSPEC_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "pointspec._kernels",
        ["src/pointspec/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
