import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

include_dirs = [np.get_include()]
extra_compile_args = ["-O3"]
define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]

extensions = [
    Extension(
        "childtalk._ext._tree",
        ["src/childtalk/_ext/_tree.pyx"],
        include_dirs=include_dirs,
        extra_compile_args=extra_compile_args,
        define_macros=define_macros,
    ),
    Extension(
        "childtalk._ext._laplace",
        ["src/childtalk/_ext/_laplace.pyx"],
        include_dirs=include_dirs,
        extra_compile_args=extra_compile_args,
        define_macros=define_macros,
    ),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": 3, "boundscheck": False, "wraparound": False},
    ),
)
