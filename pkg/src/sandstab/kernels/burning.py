"""Peeling test for allowed (recurrent) configurations."""
import numpy as np

from ._jit import HAS_NUMBA, njit


@njit
def _peel_nb(h, nbr):
    """Remove sites whose height exceeds their count of remaining neighbors.

    Returns a boolean mask of the sites never removed (empty iff allowed).
    """
    n, deg = nbr.shape
    alive = np.ones(n, dtype=np.bool_)
    count = np.zeros(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    queued = np.zeros(n, dtype=np.bool_)
    top = 0
    for i in range(n):
        for j in range(deg):
            if nbr[i, j] >= 0:
                count[i] += 1
        if h[i] > count[i]:
            stack[top] = i
            top += 1
            queued[i] = True
    while top > 0:
        top -= 1
        x = stack[top]
        alive[x] = False
        for j in range(deg):
            y = nbr[x, j]
            if y >= 0 and alive[y]:
                count[y] -= 1
                if not queued[y] and h[y] > count[y]:
                    stack[top] = y
                    top += 1
                    queued[y] = True
    return alive


def _peel_np(h, nbr):
    alive = np.ones(h.size + 1, dtype=np.int64)
    alive[-1] = 0
    live = np.ones(h.size, dtype=bool)
    while True:
        count = alive[nbr].sum(axis=1)
        drop = live & (h > count)
        if not drop.any():
            return live
        live &= ~drop
        alive[:-1] = live


@njit
def _peel_batch_nb(H, nbr):
    """Row-wise allowed-ness for a batch ``H`` of flat configurations."""
    out = np.empty(H.shape[0], dtype=np.bool_)
    for r in range(H.shape[0]):
        out[r] = not _peel_nb(H[r], nbr).any()
    return out


def _peel_batch_np(H, nbr):
    return np.array([not _peel_np(row, nbr).any() for row in H], dtype=bool)


if HAS_NUMBA:
    peel = _peel_nb
    peel_batch = _peel_batch_nb
else:
    peel = _peel_np
    peel_batch = _peel_batch_np
