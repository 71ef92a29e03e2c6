"""Build the optional compiled trajectory kernel.

The package works without the extension (a pure-Python loop is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "ttsalab._kernel",
                ["src/ttsalab/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"warning: skipping compiled kernel ({exc}); "
          "falling back to the pure-Python loop", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
