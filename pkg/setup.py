"""Build script for the optional compiled kernels.

The extension accelerates the entropy/segmentation hot loops; the package
falls back to the pure-Python kernels when the build is unavailable.
-ffp-contract=off keeps the compiled arithmetic bit-identical to the
fallback (no FMA contraction).
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "promptmine._kernels",
                ["src/promptmine/_kernels.pyx"],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
