"""Numba switch.

Set ``ERGOLAB_DISABLE_NUMBA=1`` to force the pure-numpy kernels (useful for
debugging and for checking that both paths agree).
"""

import os

USE_NUMBA = os.environ.get("ERGOLAB_DISABLE_NUMBA", "0").lower() not in ("1", "true", "yes")

try:
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False

if not HAS_NUMBA:
    USE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return _numba_njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrapper(func):
        return func

    return wrapper


def set_threads(n):
    if HAS_NUMBA and n:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
