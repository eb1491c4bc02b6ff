"""Kernel backend selection: numba JIT by default, pure numpy on request.

Set ``PWMCYCLE_DISABLE_NUMBA=1`` (or install without numba) to run the
kernels as plain numpy. The two paths execute identical code; the flag is
read once at import time.
"""

import os

_DISABLE = os.environ.get("PWMCYCLE_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

try:
    if _DISABLE:
        raise ImportError("numba disabled via PWMCYCLE_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        # Transparent decorator: @njit and @njit(cache=True) both pass through.
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
