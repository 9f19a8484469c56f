"""Build script for the optional Cython PCM kernels.

The package is pure Python apart from mgakit.kernels._pcm_cython, which
accelerates sample decode/encode and crossfade mixing.  If Cython or a C
compiler is unavailable the extension is skipped and the numpy fallback
is used at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "mgakit.kernels._pcm_cython",
        sources=["src/mgakit/kernels/_pcm_cython.pyx"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level="3")

setup(ext_modules=ext_modules)
