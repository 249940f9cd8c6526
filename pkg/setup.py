import numpy
from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "fracap._core._kernels_cy",
        ["src/fracap/_core/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
    ),
]

# The package works without the compiled kernels (numpy fallback is selected
# at import time), so a missing Cython just skips the extension.
setup(ext_modules=cythonize(extensions, language_level="3") if cythonize else [])
