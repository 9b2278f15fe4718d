"""Build the optional Earley kernel; the package works without it."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SYMPARSE_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        from setuptools import Extension
        ext_modules = cythonize(
            [Extension("symparse.grammar._earley_kernel",
                       ["src/symparse/grammar/_earley_kernel.pyx"],
                       extra_compile_args=["-O2"])],
            compiler_directives={"language_level": "3"},
            quiet=True,
        )

setup(ext_modules=ext_modules)
