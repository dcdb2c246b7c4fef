import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

compiler_directives = {
    "language_level": "3",
    "boundscheck": False,
    "wraparound": False,
    "cdivision": True,
    "initializedcheck": False,
}

extensions = cythonize(
    [
        Extension(
            "fopaeq.kernels._loops_cy",
            sources=["src/fopaeq/kernels/_loops_cy.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ],
    compiler_directives=compiler_directives,
)

setup(ext_modules=extensions)
