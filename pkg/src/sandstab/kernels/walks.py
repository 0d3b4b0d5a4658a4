"""Simple random walks killed on leaving a volume."""
import numpy as np

from ..rng import STREAM_WALK, uniform01, uniform_array
from ._jit import HAS_NUMBA, njit

_SHIFT = np.uint64(32)
_STREAM = np.uint64(STREAM_WALK)


@njit
def _count_visits_nb(nbr, start, target, n_walks, seed, max_steps):
    deg = nbr.shape[1]
    out = np.zeros(n_walks, dtype=np.int64)
    for w in range(n_walks):
        cur = start
        hits = 0
        base = np.uint64(w) << _SHIFT
        for s in range(max_steps):
            if cur == target:
                hits += 1
            j = int(uniform01(seed, _STREAM, base | np.uint64(s)) * deg)
            cur = nbr[cur, j]
            if cur < 0:
                break
        out[w] = hits
    return out


def _count_visits_np(nbr, start, target, n_walks, seed, max_steps):
    deg = nbr.shape[1]
    out = np.zeros(n_walks, dtype=np.int64)
    walk = np.arange(n_walks, dtype=np.uint64)
    pos = np.full(n_walks, start, dtype=np.int64)
    for s in range(max_steps):
        if walk.size == 0:
            break
        out[walk.astype(np.int64)] += pos == target
        u = uniform_array(int(seed), STREAM_WALK, (walk << _SHIFT) | np.uint64(s))
        pos = nbr[pos, (u * deg).astype(np.int64)]
        alive = pos >= 0
        walk, pos = walk[alive], pos[alive]
    return out


@njit
def _stopped_martingale_nb(nbr, fv, f_out, drift, start, n_walks, horizon, seed):
    deg = nbr.shape[1]
    out = np.empty(n_walks, dtype=np.float64)
    f0 = fv[start]
    for w in range(n_walks):
        cur = start
        acc = 0.0
        fend = fv[start]
        base = np.uint64(w) << _SHIFT
        for s in range(horizon):
            acc += drift[cur]
            j = int(uniform01(seed, _STREAM, base | np.uint64(s)) * deg)
            nxt = nbr[cur, j]
            if nxt < 0:
                fend = f_out[cur, j]
                break
            cur = nxt
            fend = fv[cur]
        out[w] = fend - f0 - acc
    return out


def _stopped_martingale_np(nbr, fv, f_out, drift, start, n_walks, horizon, seed):
    deg = nbr.shape[1]
    acc = np.zeros(n_walks)
    fend = np.full(n_walks, fv[start])
    walk = np.arange(n_walks, dtype=np.uint64)
    pos = np.full(n_walks, start, dtype=np.int64)
    for s in range(horizon):
        if walk.size == 0:
            break
        idx = walk.astype(np.int64)
        acc[idx] += drift[pos]
        u = uniform_array(int(seed), STREAM_WALK, (walk << _SHIFT) | np.uint64(s))
        j = (u * deg).astype(np.int64)
        nxt = nbr[pos, j]
        out_now = nxt < 0
        fend[idx[out_now]] = f_out[pos[out_now], j[out_now]]
        fend[idx[~out_now]] = fv[nxt[~out_now]]
        walk, pos = walk[~out_now], nxt[~out_now]
    return fend - fv[start] - acc


if HAS_NUMBA:
    count_visits = _count_visits_nb
    stopped_martingale = _stopped_martingale_nb
else:
    count_visits = _count_visits_np
    stopped_martingale = _stopped_martingale_np
