import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "singular_rd._kernels._core",
                ["src/singular_rd/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython available: install the pure-Python package only; the kernel
    # loader falls back to the numpy/scipy implementation at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
