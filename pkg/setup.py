import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TNVQC_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "tnvqc._sweep_ext",
                    ["src/tnvqc/_sweep_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
