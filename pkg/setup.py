import platform

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# hardware popcount for the parity loops; other targets use the builtin's fallback
flags = ["-O3"]
if platform.machine().lower() in ("x86_64", "amd64") and platform.system() != "Windows":
    flags.append("-mpopcnt")

extensions = [
    Extension(
        "npsqd._kernels",
        ["src/npsqd/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=flags,
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
)
