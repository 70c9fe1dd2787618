import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "payplan.neural._tapecore",
                ["src/payplan/neural/_tapecore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError as exc:  # pure-Python install still works, just slower
    print(f"payplan: building without compiled tape executor ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
