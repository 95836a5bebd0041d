"""Numba switch shared by the hot kernels.

Set ``FAIRREADMIT_DISABLE_NUMBA=1`` before import to force the pure-numpy
implementations (also used automatically when numba is not installed).
"""
import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

_DISABLED = os.environ.get("FAIRREADMIT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

USE_NUMBA = HAS_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op decorator without numba."""
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    if len(args) == 1 and callable(args[0]):
        return numba.njit(**kwargs)(args[0])
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
