"""Counter-based random numbers.

Every draw is a pure function ``hash64(seed, stream, counter)`` built from
the SplitMix64 finalizer, so a value depends only on its key and never on
how many draws happened before it. This is what makes i.i.d. fields
restriction-consistent across nested volumes and clock rings in the ARW
simulation independent of event order. Results are bit-identical on every
platform (pure 64-bit integer arithmetic).

The same functions accept numpy ``uint64`` arrays (vectorised) and are
compiled by numba for scalar use inside kernels.
"""
import numpy as np

from .kernels._jit import njit

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# named streams; one per consumer so that draws never collide
STREAM_IID = 1
STREAM_LINE_X = 2
STREAM_LINE_Y = 3
STREAM_CHAIN = 4
STREAM_OVERLAY = 5
STREAM_WALK = 6
STREAM_ARW = 7
STREAM_ORDER = 8
STREAM_DERIVE = 9

SITE_OFFSET = 1 << 20
SITE_BITS = 21


@njit
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def hash64(seed, stream, counter):
    """64-bit hash of ``(seed, stream, counter)``; all arguments uint64."""
    h = mix64(seed ^ _GOLDEN)
    h = mix64(h ^ mix64(stream + _GOLDEN))
    return mix64(h ^ mix64(counter + _M1))


@njit
def uniform01(seed, stream, counter):
    """Uniform double in [0, 1) with 53 random bits."""
    return float(hash64(seed, stream, counter) >> _S11) * _INV53


def _u64(x):
    a = np.asarray(x)
    if a.dtype == np.uint64:
        return a
    return a.astype(np.int64).view(np.uint64)


def hash_array(seed, stream, counters):
    """Vectorised :func:`hash64` over an integer array of counters."""
    c = _u64(counters)
    with np.errstate(over="ignore"):
        return hash64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(stream), c)


def uniform_array(seed, stream, counters):
    h = hash_array(seed, stream, counters)
    return (h >> _S11).astype(np.float64) * _INV53


def randbelow_array(seed, stream, counters, n):
    """Integers uniform on ``range(n)`` (53-bit float scaling, bias < 2**-40)."""
    u = uniform_array(seed, stream, counters)
    return np.minimum((u * n).astype(np.int64), n - 1)


def site_keys(coords):
    """Pack an ``(N, d)`` integer coordinate array into unique int64 counters.

    Coordinates must lie in ``[-2**20, 2**20)``; d <= 3.
    """
    coords = np.asarray(coords, dtype=np.int64)
    if coords.ndim == 1:
        coords = coords[:, None]
    key = np.zeros(coords.shape[0], dtype=np.int64)
    for i in range(coords.shape[1]):
        key |= (coords[:, i] + SITE_OFFSET) << (SITE_BITS * i)
    return key


def derive_seed(seed, index):
    """Independent child seed, e.g. for the two halves of a composed sampler."""
    with np.errstate(over="ignore"):
        h = hash64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(STREAM_DERIVE), np.uint64(index))
    return int(h >> np.uint64(1))
