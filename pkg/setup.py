"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-Python fallback is selected
at import time); building it makes the simulation and rasterizer roughly an
order of magnitude faster. -ffp-contract=off keeps the compiled arithmetic
bit-identical to the pure-Python reference (no fused multiply-add).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "sandtable._speed",
                ["src/sandtable/_speed.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O2", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
