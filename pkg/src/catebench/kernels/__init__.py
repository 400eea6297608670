"""Hot-loop kernels with a compiled core and a NumPy fallback.

The compiled extension (Cython) is preferred when it built; otherwise the
NumPy implementation is selected at import time. Both backends consume draws
produced by the caller, so verification results agree across backends up to
floating-point accumulation order. File-producing generation paths do not go
through this module at all: their numerics use SciPy directly so that build
digests never depend on whether the extension compiled.

``benchmarks/bench_kernels.py`` compares the two backends on the verification
workloads.
"""

from catebench.kernels import _numpy_backend

try:
    from catebench.kernels import _mc_ext

    _ACTIVE = _mc_ext
    BACKEND = "cython"
except ImportError:  # extension not built on this platform
    _ACTIVE = _numpy_backend
    BACKEND = "numpy"


def available_backends():
    """Names of the backends importable in this installation."""
    names = ["numpy"]
    if BACKEND == "cython":
        names.insert(0, "cython")
    return names


def get_backend(name):
    """Fetch a backend module by name ('cython' or 'numpy')."""
    if name == "numpy":
        return _numpy_backend
    if name == "cython" and BACKEND == "cython":
        return _mc_ext
    raise ValueError(f"backend {name!r} is not available (have: {available_backends()})")


def shifted_cdf_sums(draws, m, s):
    """Sum and sum of squares of Phi(m + s*w) over the draws."""
    return _ACTIVE.shifted_cdf_sums(draws, m, s)


def squash_contrast_sums(draws, m1, m0, s):
    """Sum and sum of squares of 13*(Phi(m1 + s*w) - Phi(m0 + s*w))."""
    return _ACTIVE.squash_contrast_sums(draws, m1, m0, s)
