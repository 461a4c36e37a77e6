"""Build script for the compiled Bloch-propagation kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time); building it just makes large ensemble runs several
times faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("chirpmem.ensemble._kernel",
                   ["src/chirpmem/ensemble/_kernel.pyx"],
                   extra_compile_args=["-O3"])],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
