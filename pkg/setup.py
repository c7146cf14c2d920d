"""Build script for the optional compiled CIM integration kernel.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes anneals considerably faster.
"""

import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "isingmimo._cim_core",
        ["src/isingmimo/_cim_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
