"""Build script for the optional compiled stepper.

The package is pure Python plus one Cython extension holding the
method-of-steps RK4 loop.  If Cython (or a C compiler) is unavailable the
extension is skipped and the numpy fallback in delaysl._backend.pure is
used at runtime instead.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "delaysl._backend._core",
                sources=["src/delaysl/_backend/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
