"""Boxes in Z^d, the toppling matrix, Green functions and random walks.

Sites are tuples of ints. A :class:`Volume` is an inclusive axis-aligned
box; arrays over a volume are indexed ``site - lo`` and flattened in C
order. Dimensions 1, 2 and 3 are tested; larger d should work but is not
exercised.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .kernels import walks as _walks
from .linalg import EXACT_INVERSE_CAP, BandedRationalLU, ExactSizeError

FLOAT_INVERSE_CAP = 16_384


@dataclass(frozen=True)
class Volume:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be non-empty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty volume lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def box(cls, L, d=2, center=None):
        """Box of side ``L`` containing ``center`` (default origin).

        Odd ``L`` is symmetric about the center; even ``L`` spans
        ``-L/2 .. L/2 - 1``.
        """
        center = (0,) * d if center is None else tuple(center)
        lo = tuple(c - L // 2 for c in center)
        return cls(lo, tuple(a + L - 1 for a in lo))

    @property
    def d(self):
        return len(self.lo)

    @property
    def shape(self):
        return tuple(b - a + 1 for a, b in zip(self.lo, self.hi))

    @property
    def size(self):
        return math.prod(self.shape)

    def __contains__(self, x):
        return len(x) == self.d and all(a <= c <= b for a, c, b in zip(self.lo, x, self.hi))

    def contains_volume(self, other):
        return all(a <= c and d_ <= b for a, c, d_, b in zip(self.lo, other.lo, other.hi, self.hi))

    def index(self, x):
        """Flat index of site ``x``."""
        if x not in self:
            raise ValueError(f"site {x} not in {self}")
        return int(np.ravel_multi_index(tuple(c - a for c, a in zip(x, self.lo)), self.shape))

    def site(self, index):
        return tuple(int(i) + a for i, a in zip(np.unravel_index(index, self.shape), self.lo))

    def coords(self):
        """``(N, d)`` array of site coordinates in flat order."""
        grids = np.indices(self.shape).reshape(self.d, -1).T
        return grids + np.asarray(self.lo, dtype=np.int64)

    def slices_in(self, outer):
        """Index tuple selecting this volume inside an array over ``outer``."""
        if not outer.contains_volume(self):
            raise ValueError(f"{self} is not contained in {outer}")
        return tuple(slice(a - o, b - o + 1) for a, b, o in zip(self.lo, self.hi, outer.lo))

    def grow(self, k=1):
        return Volume(tuple(a - k for a in self.lo), tuple(b + k for b in self.hi))

    def to_json(self):
        return {"d": self.d, "lo": list(self.lo), "hi": list(self.hi)}


def neighbors(x, d=None):
    """The 2d nearest neighbors, ordered +e_0, -e_0, +e_1, -e_1, ..."""
    x = tuple(x)
    d = len(x) if d is None else d
    out = []
    for i in range(d):
        for s in (1, -1):
            y = list(x)
            y[i] += s
            out.append(tuple(y))
    return out


def lacking_neighbors(x, V):
    """Number of neighbors of ``x`` outside ``V``."""
    if x not in V:
        raise ValueError(f"site {x} not in volume")
    return sum(1 for y in neighbors(x, V.d) if y not in V)


@lru_cache(maxsize=64)
def _neighbor_table(V):
    shape = V.shape
    n = V.size
    idx = np.arange(n, dtype=np.int64).reshape(shape)
    cols = []
    for axis in range(V.d):
        for s in (1, -1):
            t = np.full(shape, -1, dtype=np.int64)
            src = [slice(None)] * V.d
            dst = [slice(None)] * V.d
            if s == 1:
                dst[axis], src[axis] = slice(0, -1), slice(1, None)
            else:
                dst[axis], src[axis] = slice(1, None), slice(0, -1)
            t[tuple(dst)] = idx[tuple(src)]
            cols.append(t.reshape(-1))
    table = np.stack(cols, axis=1)
    table.setflags(write=False)
    return table


def neighbor_table(V):
    """``(N, 2d)`` flat-index neighbor table; -1 marks a neighbor outside V."""
    return _neighbor_table(V)


def lacking_array(V):
    """``lambda_V`` for every site, shaped like ``V``."""
    return (neighbor_table(V) < 0).sum(axis=1).reshape(V.shape)


def bandwidth(V):
    return math.prod(V.shape[1:]) if V.d > 1 else 1


def apply_toppling_matrix(V, m):
    """``Delta_V m`` via the nearest-neighbor stencil (integer-exact)."""
    m = np.asarray(m)
    flat = m.reshape(-1)
    nbr = neighbor_table(V)
    padded = np.append(flat, np.zeros(1, dtype=flat.dtype))
    out = 2 * V.d * flat - padded[nbr].sum(axis=1)
    return out.reshape(V.shape)


def toppling_matrix(V):
    """Sparse CSR ``Delta_V``."""
    nbr = neighbor_table(V)
    n, deg = nbr.shape
    rows = np.repeat(np.arange(n), deg)
    cols = nbr.reshape(-1)
    keep = cols >= 0
    data = np.concatenate([np.full(n, deg, dtype=np.int64), -np.ones(keep.sum(), dtype=np.int64)])
    rows = np.concatenate([np.arange(n), rows[keep]])
    cols = np.concatenate([np.arange(n), cols[keep]])
    return scipy.sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class GreenMatrix:
    """Inverse of ``Delta_V``; ``entries`` is a list of Fraction rows or a float array."""

    volume: Volume
    entries: object
    mode: str

    def __getitem__(self, pair):
        x, y = pair
        i, j = self.volume.index(tuple(x)), self.volume.index(tuple(y))
        return self.entries[i][j]

    def residual(self):
        """Max-abs entry of ``Delta_V G - I`` (exactly 0 in exact mode)."""
        if self.mode == "exact":
            nbr = neighbor_table(self.volume)
            n, deg = nbr.shape
            worst = Fraction(0)
            for i in range(n):
                row = self.entries[i]
                for k in range(n):
                    acc = deg * row[k]
                    for j in nbr[i]:
                        if j >= 0:
                            acc -= self.entries[int(j)][k]
                    acc -= 1 if i == k else 0
                    worst = max(worst, abs(acc))
            return worst
        D = toppling_matrix(self.volume)
        return float(np.abs(D @ self.entries - np.eye(self.volume.size)).max())

    def to_json(self):
        if self.mode == "exact":
            table = [[[str(v.numerator), str(v.denominator)] for v in row] for row in self.entries]
        else:
            table = np.asarray(self.entries).tolist()
        return {"volume": self.volume.to_json(), "mode": self.mode, "entries": table}

    @classmethod
    def from_json(cls, obj):
        V = Volume(obj["volume"]["lo"], obj["volume"]["hi"])
        if obj["mode"] == "exact":
            entries = [[Fraction(int(a), int(b)) for a, b in row] for row in obj["entries"]]
        else:
            entries = np.asarray(obj["entries"], dtype=np.float64)
        return cls(V, entries, obj["mode"])


def green_function(V, mode="exact"):
    """``G_V = Delta_V^{-1}``.

    Exact mode is refused above ``EXACT_INVERSE_CAP`` sites, float mode
    above ``FLOAT_INVERSE_CAP``; use :func:`green_row` for a single row.
    """
    n = V.size
    if mode == "exact":
        if n > EXACT_INVERSE_CAP:
            raise ExactSizeError(f"{n} sites exceeds exact inverse cap {EXACT_INVERSE_CAP}")
        lu = BandedRationalLU(neighbor_table(V), bandwidth(V))
        cols = []
        for k in range(n):
            e = [0] * n
            e[k] = 1
            cols.append(lu.solve(e))
        # symmetric, so column k is row k
        return GreenMatrix(V, cols, "exact")
    if mode == "float":
        if n > FLOAT_INVERSE_CAP:
            raise ExactSizeError(f"{n} sites exceeds float inverse cap {FLOAT_INVERSE_CAP}")
        D = toppling_matrix(V).tocsc().astype(np.float64)
        G = scipy.sparse.linalg.splu(D).solve(np.eye(n))
        return GreenMatrix(V, G, "float")
    raise ValueError(f"unknown mode {mode!r}")


def green_row(V, x, mode="exact"):
    """Row ``G_V(x, .)`` as a flat list of Fractions (or float array)."""
    n = V.size
    e = np.zeros(n, dtype=np.int64)
    e[V.index(tuple(x))] = 1
    if mode == "exact":
        return BandedRationalLU(neighbor_table(V), bandwidth(V)).solve(e.tolist())
    D = toppling_matrix(V).tocsc().astype(np.float64)
    return scipy.sparse.linalg.spsolve(D, e.astype(np.float64))


def rw_visits_estimate(V, x, y, n_walks, seed, max_steps=10**8):
    """Monte Carlo estimate of ``G_V(x, y)`` as (1/2d) x mean visits to y.

    Walks are simple (non-lazy) and killed on leaving V. Returns
    ``(estimate, stderr)``.
    """
    if n_walks < 1:
        raise ValueError("n_walks must be >= 1")
    nbr = neighbor_table(V)
    visits = _walks.count_visits(
        nbr, V.index(tuple(x)), V.index(tuple(y)), int(n_walks), np.uint64(seed), int(max_steps)
    )
    scale = 1.0 / (2 * V.d)
    est = visits.mean() * scale
    err = visits.std(ddof=1) * scale / math.sqrt(n_walks) if n_walks > 1 else 0.0
    return est, err


def discrete_laplacian(f, x):
    """``2d f(x) - sum of f over the neighbors`` (infinite-volume Delta)."""
    x = tuple(x)
    return 2 * len(x) * f(x) - sum(f(y) for y in neighbors(x))


def martingale_mean(f, V, n_walks, horizon, seed, start=None):
    """Sample mean and stderr of the stopped martingale
    ``M = f(X_n) - f(X_0) - sum_{i<n} (Pf - f)(X_i)`` with ``n = min(horizon, tau_V)``.

    ``f`` is called on every site of V and on the one-site halo.
    """
    nbr = neighbor_table(V)
    sites = [tuple(c) for c in V.coords()]
    fv = np.array([f(s) for s in sites], dtype=np.float64)
    f_out = np.zeros(nbr.shape, dtype=np.float64)
    neigh_sum = np.zeros(len(sites), dtype=np.float64)
    for i, s in enumerate(sites):
        for j, y in enumerate(neighbors(s)):
            fy = f(y)
            neigh_sum[i] += fy
            if nbr[i, j] < 0:
                f_out[i, j] = fy
    drift = neigh_sum / nbr.shape[1] - fv
    if start is None:
        start = (0,) * V.d if (0,) * V.d in V else V.site(V.size // 2)
    samples = _walks.stopped_martingale(
        nbr, fv, f_out, drift, V.index(tuple(start)), int(n_walks), int(horizon), np.uint64(seed)
    )
    err = samples.std(ddof=1) / math.sqrt(n_walks) if n_walks > 1 else 0.0
    return float(samples.mean()), float(err)


__all__ = [
    "Volume",
    "GreenMatrix",
    "neighbors",
    "lacking_neighbors",
    "lacking_array",
    "neighbor_table",
    "apply_toppling_matrix",
    "toppling_matrix",
    "green_function",
    "green_row",
    "rw_visits_estimate",
    "discrete_laplacian",
    "martingale_mean",
]
