"""Builds the optional compiled kernels; the package falls back to pure Python without them."""
import os

from setuptools import Extension, setup


def ext_modules():
    if os.environ.get("ULCH_NO_EXTENSION"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension("ulch._ckernels", ["src/ulch/_ckernels.pyx"], include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])
    return cythonize([ext], language_level=3)


setup(ext_modules=ext_modules())
