"""Build script for the compiled DTW kernel.

The extension is optional: if no C compiler (or Cython) is available the
package installs anyway and falls back to the pure-Python kernel at import
time.  Run ``python setup.py build_ext --inplace`` to compile in a source
checkout.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"could not build the compiled DTW kernel ({exc}); "
            "turnoutguard will use the pure-Python fallback"
        )


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "turnoutguard._dtw_cy",
        sources=["src/turnoutguard/_dtw_cy.pyx"],
        include_dirs=[np.get_include()],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
