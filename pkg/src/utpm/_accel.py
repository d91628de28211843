"""Numba switch.

Set ``UTPM_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
fallback. The choice is made once, at import time.
"""
import os

_FLAG = os.environ.get("UTPM_DISABLE_NUMBA", "").strip().lower()

USE_NUMBA = _FLAG not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        # bare @njit and @njit(...) both supported
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrapper(func):
            return func

        return wrapper


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
