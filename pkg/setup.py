"""Build script: compiles the Cython scan kernels when possible.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a warning rather than
aborting the install.
"""

import sys

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "trivoxel._kernels",
                sources=["src/trivoxel/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: Cython extension skipped ({exc}); numpy fallback will be used",
          file=sys.stderr)
    ext_modules = []

setup(ext_modules=ext_modules)
