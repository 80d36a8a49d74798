import os
import sys

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# OpenMP is optional; set SPHVQI_NO_OPENMP=1 to build a serial core
use_omp = os.environ.get("SPHVQI_NO_OPENMP") != "1" and sys.platform != "darwin"
omp_flags = ["-fopenmp"] if use_omp else []

ext = Extension(
    "sphvqi._ckernels",
    sources=["src/sphvqi/_ckernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O3"] + omp_flags,
    extra_link_args=omp_flags,
)

setup(ext_modules=cythonize([ext], language_level="3"))
