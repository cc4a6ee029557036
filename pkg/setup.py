"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a missing Cython or C toolchain only costs speed.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy
except ImportError:
    cythonize = None

if cythonize is None:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "vibfact._kernels",
                ["src/vibfact/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
