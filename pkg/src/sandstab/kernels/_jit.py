"""Numba shim.

Set ``SANDSTAB_NO_NUMBA=1`` to force the pure-numpy code paths, e.g. to
compare timings or to debug without compilation.
"""
import os

_disabled = os.environ.get("SANDSTAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError("disabled by SANDSTAB_NO_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True, nogil=True`` defaults, or identity."""
    if not HAS_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if len(args) == 1 and callable(args[0]):
        return _njit(**kwargs)(args[0])
    return _njit(*args, **kwargs)
