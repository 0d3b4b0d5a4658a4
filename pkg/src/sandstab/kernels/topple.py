"""Toppling loops on flat height arrays.

All kernels mutate ``h`` (int64 heights) and ``m`` (int64 toppling counts)
in place and return a status code. A site is unstable when its height
exceeds the number of columns of the neighbor table (2d).
"""
import numpy as np

from ..rng import STREAM_ORDER, uniform01
from ._jit import HAS_NUMBA, njit

OK = 0
CAPPED = 1
NOT_A_WAVE = 2

QUEUE, STACK, RANDOM, SCANLINE = 0, 1, 2, 3

_STREAM = np.uint64(STREAM_ORDER)


@njit
def _stabilize_fifo_nb(h, m, nbr, cap):
    """FIFO relaxation with bulk toppling.

    A dequeued site with height h > 2d topples k = (h - 2d - 1) // 2d + 1
    times at once, the largest count for which every single toppling in
    the batch is legal.
    """
    n, deg = nbr.shape
    queue = np.empty(n, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    head = 0
    size = 0
    for i in range(n):
        if h[i] > deg:
            queue[size] = i
            inq[i] = True
            size += 1
    while size > 0:
        x = queue[head]
        head += 1
        if head == n:
            head = 0
        size -= 1
        inq[x] = False
        k = (h[x] - deg - 1) // deg + 1
        h[x] -= k * deg
        m[x] += k
        for j in range(deg):
            y = nbr[x, j]
            if y >= 0:
                h[y] += k
                if h[y] > deg and not inq[y]:
                    tail = head + size
                    if tail >= n:
                        tail -= n
                    queue[tail] = y
                    inq[y] = True
                    size += 1
        if m[x] > cap:
            return CAPPED
    return OK


def _stabilize_sweep_np(h, m, nbr, cap):
    """Parallel sweeps: every unstable site bulk-topples simultaneously."""
    deg = nbr.shape[1]
    pad = np.zeros(h.size + 1, dtype=np.int64)
    while True:
        unstable = h > deg
        if not unstable.any():
            return OK
        k = np.where(unstable, (h - deg - 1) // deg + 1, 0)
        h -= k * deg
        m += k
        pad[:-1] = k
        h += pad[nbr].sum(axis=1)
        if m.max() > cap:
            return CAPPED


@njit
def _stabilize_ordered_nb(h, m, nbr, cap, policy, seed):
    """One toppling per pick, sites chosen by ``policy``.

    QUEUE and STACK keep unstable sites in a FIFO / LIFO; RANDOM picks a
    uniformly random unstable site (counter-based draws keyed by step);
    SCANLINE sweeps the flat index order until a sweep topples nothing.
    """
    n, deg = nbr.shape
    if policy == SCANLINE:
        changed = True
        while changed:
            changed = False
            for x in range(n):
                if h[x] > deg:
                    h[x] -= deg
                    m[x] += 1
                    for j in range(deg):
                        y = nbr[x, j]
                        if y >= 0:
                            h[y] += 1
                    if m[x] > cap:
                        return CAPPED
                    changed = True
        return OK
    # pool of unstable sites; pos[x] = slot of x or -1
    pool = np.empty(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    head = 0
    size = 0
    for i in range(n):
        if h[i] > deg:
            pool[size] = i
            pos[i] = size
            size += 1
    step = np.uint64(0)
    while size > 0:
        if policy == QUEUE:
            x = pool[head]
            head += 1
            if head == n:
                head = 0
            size -= 1
        elif policy == STACK:
            size -= 1
            x = pool[size]
        else:
            r = int(uniform01(seed, _STREAM, step) * size)
            step += np.uint64(1)
            x = pool[r]
            size -= 1
            last = pool[size]
            pool[r] = last
            pos[last] = r
        pos[x] = -1
        h[x] -= deg
        m[x] += 1
        if m[x] > cap:
            return CAPPED
        if h[x] > deg:
            # still unstable: put it back
            slot = head + size if policy == QUEUE else size
            if slot >= n:
                slot -= n
            pool[slot] = x
            pos[x] = slot
            size += 1
        for j in range(deg):
            y = nbr[x, j]
            if y >= 0:
                h[y] += 1
                if h[y] > deg and pos[y] < 0:
                    slot = head + size if policy == QUEUE else size
                    if slot >= n:
                        slot -= n
                    pool[slot] = y
                    pos[y] = slot
                    size += 1
    return OK


@njit
def _waves_nb(h, m, nbr, origin, max_waves):
    """Decompose the relaxation after an addition at ``origin`` into waves.

    ``h`` must be stable except possibly at ``origin``. Returns
    ``(status, n_waves, sites, offsets)``: wave w toppled
    ``sites[offsets[w]:offsets[w + 1]]``, origin first.
    """
    n, deg = nbr.shape
    queue = np.empty(n, dtype=np.int64)
    queued = np.full(n, -1, dtype=np.int64)
    done = np.full(n, -1, dtype=np.int64)
    cap = 1024
    sites = np.empty(cap, dtype=np.int64)
    offsets = np.zeros(64, dtype=np.int64)
    count = 0
    w = 0
    while h[origin] > deg:
        if w == max_waves:
            return CAPPED, w, sites[:count], offsets[: w + 1]
        if w + 1 == offsets.size:
            grown_off = np.zeros(2 * offsets.size, dtype=np.int64)
            grown_off[: w + 1] = offsets[: w + 1]
            offsets = grown_off
        head = 0
        tail = 0
        queue[tail] = origin
        tail += 1
        queued[origin] = w
        while head < tail:
            x = queue[head]
            head += 1
            h[x] -= deg
            m[x] += 1
            done[x] = w
            if h[x] > deg and x != origin:
                return NOT_A_WAVE, w, sites[:count], offsets[: w + 1]
            if count == cap:
                cap *= 2
                grown = np.empty(cap, dtype=np.int64)
                grown[:count] = sites[:count]
                sites = grown
            sites[count] = x
            count += 1
            for j in range(deg):
                y = nbr[x, j]
                if y >= 0:
                    h[y] += 1
                    if h[y] > deg and y != origin and queued[y] != w:
                        if done[y] == w:
                            return NOT_A_WAVE, w, sites[:count], offsets[: w + 1]
                        queued[y] = w
                        queue[tail] = y
                        tail += 1
        w += 1
        offsets[w] = count
    return OK, w, sites[:count], offsets[: w + 1]


def _waves_np(h, m, nbr, origin, max_waves):
    deg = nbr.shape[1]
    n = h.size
    pad = np.zeros(n + 1, dtype=np.int64)
    chunks = []
    offsets = [0]
    w = 0
    while h[origin] > deg:
        if w == max_waves:
            return CAPPED, w, _concat(chunks), np.array(offsets)
        toppled = np.zeros(n, dtype=np.bool_)
        fire = np.zeros(n, dtype=np.bool_)
        fire[origin] = True
        order = []
        while fire.any():
            if (toppled & fire).any():
                return NOT_A_WAVE, w, _concat(chunks + order), np.array(offsets)
            toppled |= fire
            k = fire.astype(np.int64)
            h -= k * deg
            m += k
            order.append(np.flatnonzero(fire))
            pad[:-1] = k
            h += pad[nbr].sum(axis=1)
            fire = h > deg
            fire[origin] = False
        chunks.extend(order)
        w += 1
        offsets.append(offsets[-1] + int(toppled.sum()))
    return OK, w, _concat(chunks), np.array(offsets, dtype=np.int64)


def _concat(chunks):
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)


if HAS_NUMBA:
    stabilize_default = _stabilize_fifo_nb
    stabilize_ordered = _stabilize_ordered_nb
    waves = _waves_nb
else:
    stabilize_default = _stabilize_sweep_np
    stabilize_ordered = _stabilize_ordered_nb
    waves = _waves_np

stabilize_sweep = _stabilize_sweep_np
