"""Build script: compiles the optional extension core.

The compiled kernels are a drop-in twin of the pure-numpy ones; if the
build fails (no compiler, no Cython), installation proceeds and the package
falls back to the pure backend at import.  Build in place with:

    python setup.py build_ext --inplace
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing etc.
            print(f"warning: compiled kernels skipped ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(
                f"warning: building {ext.name} failed ({exc}); "
                "falling back to pure-python kernels",
                file=sys.stderr,
            )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"warning: {exc}; compiled kernels skipped", file=sys.stderr)
        return []
    from setuptools import Extension

    return cythonize(
        [
            Extension(
                "jtfe.nn._ckernels",
                ["src/jtfe/nn/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
