"""Build script: compiles the optional Cython kernel for the element hot loop.

The package works without the extension (a vectorized numpy fallback is
selected at import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "snapspiral.kernels._corotational_cy",
                ["src/snapspiral/kernels/_corotational_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"snapspiral: skipping Cython extension build ({exc})")

setup(ext_modules=ext_modules)
