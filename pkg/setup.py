"""Build hook for the optional compiled eigen-kernel.

The package works without it; ``projlab._backend`` falls back to the
pure-Python kernel when the extension is missing.
"""
from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # Cython absent: ship the fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "projlab._eigkernel",
                ["src/projlab/_eigkernel.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
