from setuptools import setup
from Cython.Build import cythonize

setup(
    ext_modules=cythonize(
        ["src/groundedness/_kernels/permute_cy.pyx"],
        language_level=3,
    ),
)
