"""Build script for the optional compiled kernels.

The Cython extension ``specround._kernels`` accelerates the scalar hot loops
of the swap iteration. When Cython or a C compiler is unavailable the build
still succeeds and the package falls back to ``specround._pykernels``.
"""

from __future__ import annotations

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Treat a failed extension build as a warning, not an error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            self.warn(f"compiled kernels unavailable, using pure Python: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - depends on toolchain
            self.warn(f"failed to build {ext.name}: {exc}")


def _extensions():
    if os.environ.get("SPECROUND_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    ext = Extension(
        "specround._kernels",
        ["src/specround/_kernels.pyx"],
        # Keep a*b+c as two roundings so both backends agree bit for bit.
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
