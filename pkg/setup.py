"""Build script for the optional Cython extension.

The compiled module accelerates the Monte Carlo verification kernels. If the
build fails (no compiler, no Cython), the package still installs and falls
back to the NumPy backend at import time.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Degrade to the pure NumPy backend instead of failing the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"skipping compiled kernels ({exc}); NumPy backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name} ({exc}); NumPy backend will be used")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "catebench.kernels._mc_ext",
                ["src/catebench/kernels/_mc_ext.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
