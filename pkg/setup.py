import platform

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

if platform.machine().lower() in ("x86_64", "amd64"):
    compile_args = [
        "-O3",
        "-march=native",
        "-mprefer-vector-width=512",
        "-ffp-contract=off",
        "-fno-math-errno",
    ]
else:
    # -ffp-contract=off keeps mul/add rounding identical across builds
    compile_args = ["-O3", "-ffp-contract=off", "-fno-math-errno"]

ext = Extension(
    "simjoin._ckern",
    sources=["src/simjoin/_ckern.pyx", "src/simjoin/_kernelcore.c"],
    include_dirs=[np.get_include(), "src/simjoin"],
    extra_compile_args=compile_args,
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level="3"))
