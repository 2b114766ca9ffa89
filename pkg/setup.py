"""Build script for the compiled LSTM-cell kernels.

The extension is optional: if the build fails the package falls back to the
pure-NumPy kernels in ``anticipation_rnn.kernels.pykernels``.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "anticipation_rnn.kernels._core",
        sources=["src/anticipation_rnn/kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )
)
