"""Build the compiled simulation kernels; a pure-Python fallback ships alongside."""
import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# fp contraction would let the compiler fuse multiply-adds and break bit
# equality with the pure-Python backend
flags = ["-O2", "-ffp-contract=off"]

extensions = [
    Extension("ggn_lab.sim._kernel", ["src/ggn_lab/sim/_kernel.pyx"],
              include_dirs=[np.get_include()], extra_compile_args=flags,
              define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]),
]

setup(ext_modules=cythonize(extensions, language_level=3))
