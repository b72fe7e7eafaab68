"""Build script for the compiled propagation kernels.

The extension is optional: if Cython (or a C compiler) is unavailable the
package installs anyway and falls back to the pure-Python kernels at import
time.  `python setup.py build_ext --inplace` drops the .so next to the
sources for development checkouts.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "qshoot._kernels",
                ["src/qshoot/_kernels.pyx"],
                # -ffp-contract=off keeps the compiled arithmetic identical
                # to the pure-Python kernels (no FMA re-association).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
