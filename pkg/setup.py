"""Build script: compiles the optional C speedup kernels.

The package works without the extension (a pure-Python fallback is selected
at import time); a failed compile therefore degrades the install instead of
breaking it.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"svrs: skipping native kernels ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"svrs: failed to build {ext.name} ({exc}); pure-Python fallback will be used")


ext_modules = []
if os.environ.get("SVRS_NO_NATIVE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "svrs._kernels._native",
                    ["src/svrs/_kernels/_native.pyx"],
                    # -ffp-contract=off: results must match the pure-Python
                    # fallback bit for bit, so no FMA contraction.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("svrs: Cython not available; pure-Python fallback will be used")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
