"""Optional numba acceleration.

Set ``LIMTERP_DISABLE_NUMBA=1`` before import to run every kernel on its
pure-numpy path.
"""

import os

try:
    from numba import njit as _njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("LIMTERP_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def optional_njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity otherwise."""
    if len(args) == 1 and callable(args[0]) and not kwargs:
        func = args[0]
        return _njit(cache=True)(func) if USE_NUMBA else func

    def decorator(func):
        if USE_NUMBA:
            kwargs.setdefault("cache", True)
            return _njit(*args, **kwargs)(func)
        return func

    return decorator
