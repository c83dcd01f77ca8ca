import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/cardioseg/kernels/_convkern.pyx"],
        language_level=3,
    )
except ImportError:
    # pure-numpy fallback kernels are selected at import time
    ext_modules = None

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
