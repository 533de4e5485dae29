from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qcdi._core",
                ["src/qcdi/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python fallback backend is used when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules)
