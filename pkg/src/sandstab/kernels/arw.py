"""Event loop for continuous-time toppling driven by per-site Poisson clocks.

Ring ``k`` of site ``x`` happens at ``T_k = E_0 + ... + E_k`` with
``E_j = -log(1 - U)`` and ``U`` drawn from the counter ``(x << 32) | j``.
``next_time[x]`` is ``T_{rings[x]}``, the first ring not yet counted.
Only unstable sites sit in the heap; a stable site's clock is advanced
lazily when it becomes unstable (its rings in between were no-ops).
"""
import heapq
import math

import numpy as np

from ..rng import STREAM_ARW, uniform01
from ._jit import njit

QUIESCENT = 0
TIME_LIMIT = 1
BUDGET = 2
ILLEGAL = 3

_STREAM = np.uint64(STREAM_ARW)
_SHIFT = np.uint64(32)


@njit
def _gap(seed, x, k):
    u = uniform01(seed, _STREAM, (np.uint64(x) << _SHIFT) | np.uint64(k))
    return -math.log(1.0 - u)


@njit
def first_rings(seed, n):
    out = np.empty(n, dtype=np.float64)
    for x in range(n):
        out[x] = _gap(seed, x, 0)
    return out


@njit
def advance_clocks(rings, next_time, seed, t):
    """Count every ring at time ``<= t`` on every site."""
    for x in range(rings.size):
        while next_time[x] <= t:
            rings[x] += 1
            next_time[x] += _gap(seed, x, rings[x])


@njit
def run_events(h, n, rings, next_time, scheduled, nbr, seed, t_limit, max_events):
    """Process rings in time order (ties by site index) up to ``t_limit``.

    Returns ``(status, t_last, events)``; the arrays are updated in place
    and the call can be resumed. A ring of a scheduled site always finds
    it unstable; ``ILLEGAL`` reports the impossible opposite.
    """
    deg = nbr.shape[1]
    heap = [(0.0, 0)]
    heap.pop()
    for x in range(h.size):
        if scheduled[x]:
            heap.append((next_time[x], x))
    heapq.heapify(heap)
    events = 0
    t_last = 0.0
    while len(heap) > 0:
        if heap[0][0] > t_limit:
            return TIME_LIMIT, t_last, events
        if events == max_events:
            return BUDGET, t_last, events
        t, x = heapq.heappop(heap)
        t_last = t
        events += 1
        rings[x] += 1
        next_time[x] = t + _gap(seed, x, rings[x])
        if h[x] <= deg:
            return ILLEGAL, t_last, events
        h[x] -= deg
        n[x] += 1
        if h[x] > deg:
            heapq.heappush(heap, (next_time[x], x))
        else:
            scheduled[x] = False
        for j in range(deg):
            y = nbr[x, j]
            if y >= 0:
                h[y] += 1
                if h[y] > deg and not scheduled[y]:
                    while next_time[y] <= t:
                        rings[y] += 1
                        next_time[y] += _gap(seed, y, rings[y])
                    scheduled[y] = True
                    heapq.heappush(heap, (next_time[y], y))
    return QUIESCENT, t_last, events
