import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext = ".pyx" if cythonize else ".c"
extensions = [
    Extension(
        "fembem._kernels_cy",
        [f"src/fembem/_kernels_cy{ext}"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fcx-limited-range"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]
if cythonize:
    extensions = cythonize(extensions, language_level=3)

setup(ext_modules=extensions)
