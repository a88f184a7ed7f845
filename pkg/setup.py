"""Builds the optional compiled edit-distance kernel.

The package works without it: spellnorm.textcore falls back to the pure
Python implementation when the extension is missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "spellnorm._editdist",
                ["src/spellnorm/_editdist.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
