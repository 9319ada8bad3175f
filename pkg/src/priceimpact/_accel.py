"""Backend selection for the compiled kernels.

Set ``PRICEIMPACT_NO_NUMBA=1`` to force the pure-numpy path (useful for
debugging and for machines without a working LLVM).  The flag is read once
at import time.
"""

import os

_FLAG = os.environ.get("PRICEIMPACT_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when available, else a no-op decorator."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _njit(*args, **kwargs)
