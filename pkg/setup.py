"""Build script for the optional Cython kernels.

If Cython or a C compiler is unavailable the package still installs and runs
on the pure-Python kernels.
"""

import os

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernels not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python fallback")


ext_modules = []
if os.environ.get("SEWKIT_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "sewkit._ckernels",
                    ["src/sewkit/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math / FMA contraction: results must match the Python twin bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
