"""Build script for the optional compiled aggregation kernels.

The package is pure Python plus one small Cython extension used by the
encoder's hot loop.  The extension is optional: if it fails to build (or
Cython is unavailable) the install still succeeds and the encoder falls
back to the numpy implementation at import time.
"""

from setuptools import setup, Extension

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "moltok._kernels",
                ["src/moltok/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
