import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # extension is optional; the package falls back to Python
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("LOCALAVOID_NO_EXT"):
    ext_modules = cythonize(
        [Extension("localavoid._kernels", ["src/localavoid/_kernels.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
