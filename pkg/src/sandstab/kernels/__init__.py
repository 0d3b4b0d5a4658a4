"""Hot loops, each with a numba version and a numpy/python fallback.

The public wrappers pick the numba path when numba imports and
``SANDSTAB_NO_NUMBA`` is unset. Both paths consume the same counter-based
random draws, so results agree bit for bit.
"""
from ._jit import HAS_NUMBA

__all__ = ["HAS_NUMBA"]
