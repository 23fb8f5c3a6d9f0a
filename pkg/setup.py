"""Builds the optional compiled kernel; the package falls back to pure Python without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DCSL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "dcsl._kernels",
            sources=["src/dcsl/_kernels.pyx"],
            # keep a*b + c unfused so the compiled and Python kernels agree bit for bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
            optional=True,
        )
        ext_modules = cythonize([ext], language_level=3, quiet=True)

setup(ext_modules=ext_modules)
