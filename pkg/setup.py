from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the numpy fallback is used at runtime
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "deltanet._ckernels",
                ["src/deltanet/_ckernels.pyx"],
                # no FMA contraction: both backends must round identically
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
