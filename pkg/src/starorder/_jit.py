"""Kernel backend selection.

Hot kernels are written twice: a numba ``@njit`` loop version and a
vectorised numpy version. ``STARORDER_NO_JIT=1`` (or numba missing) selects
the numpy path at import time; ``set_backend`` switches at runtime.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_OPTIONS = {"nogil": True, "cache": True}

_DISABLED = os.environ.get("STARORDER_NO_JIT", "").strip().lower() in ("1", "true", "yes")
_backend = "numpy" if (_DISABLED or numba is None) else "numba"


def njit(func):
    if numba is None:
        return func
    return numba.njit(**JIT_OPTIONS)(func)


def backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    _backend = name


def use_jit():
    return _backend == "numba"
