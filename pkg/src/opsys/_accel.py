"""Optional numba acceleration.

Setting ``OPSYS_DISABLE_NUMBA=1`` (or ``true``/``yes``) before import switches every
hot kernel to its pure-numpy fallback. The flag is read once, at import time.
"""

import os

DISABLE_ENV = "OPSYS_DISABLE_NUMBA"


def _flag_set(name):
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and not _flag_set(DISABLE_ENV)


def njit(func):
    """``numba.njit(cache=True)`` when acceleration is enabled, otherwise identity."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func
