"""Finite-volume stabilization, boundary additions and wave decomposition."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.ndimage
import scipy.sparse.linalg

from .config import HeightConfig
from .kernels import topple as _k
from .lattice import Volume, apply_toppling_matrix, lacking_array, neighbor_table, toppling_matrix

DEFAULT_CAP = 10**7
WARM_START_MAX_SITES = 250_000
DEFAULT_MAX_WAVES = 10**6

ORDER_POLICIES = ("fifo-bulk", "queue", "stack", "random", "scanline", "parallel-sweep")
_POLICY_CODES = {"queue": _k.QUEUE, "stack": _k.STACK, "random": _k.RANDOM, "scanline": _k.SCANLINE}


class IdentityViolation(AssertionError):
    """Boundary addition did not topple every site exactly once."""

    def __init__(self, message, m, xi):
        super().__init__(message)
        self.m = m
        self.xi = xi


@dataclass(frozen=True, eq=False)
class StabilizationResult:
    xi: HeightConfig
    m: np.ndarray
    total_topplings: int
    grains_lost: int
    capped: bool = False
    waves: int = None


@dataclass(frozen=True, eq=False)
class WaveDecomposition:
    """Waves after adding one grain at ``origin``.

    ``sites[offsets[w]:offsets[w+1]]`` are the flat indices toppled in wave
    ``w`` (origin first). The origin is always part of the support.
    """

    volume: Volume
    origin: tuple
    sites: np.ndarray
    offsets: np.ndarray
    xi: HeightConfig
    m: np.ndarray
    capped: bool = False

    @property
    def count(self):
        return len(self.offsets) - 1

    def support(self, w):
        """Sites (tuples) toppled in wave ``w``."""
        return [self.volume.site(i) for i in self.sites[self.offsets[w] : self.offsets[w + 1]]]

    def support_mask(self, w):
        mask = np.zeros(self.volume.size, dtype=bool)
        mask[self.sites[self.offsets[w] : self.offsets[w + 1]]] = True
        return mask.reshape(self.volume.shape)

    def wave_vector(self, w):
        """0/1 toppling vector of wave ``w``."""
        return self.support_mask(w).astype(np.int64)

    def supports(self):
        return [self.support_mask(w) for w in range(self.count)]


def _volume_of(eta, V):
    if V is None:
        return eta.volume
    if V != eta.volume:
        raise ValueError(f"configuration lives on {eta.volume}, not {V}")
    return V


@lru_cache(maxsize=16)
def _factorized(V):
    return scipy.sparse.linalg.splu(toppling_matrix(V).tocsc().astype(np.float64))


def odometer_lower_bound(V, heights):
    """Integer ``u0`` with ``0 <= u0 <= m`` for the stabilization of ``heights``.

    Since ``m = G_V (eta - xi)``, ``G_V >= 0`` and ``xi <= 2d``, we have
    ``m >= G_V (eta - 2d)``. The float solve is rounded down with a margin
    well above its error.
    """
    rhs = np.asarray(heights, dtype=np.float64).reshape(-1) - 2 * V.d
    g = _factorized(V).solve(rhs)
    margin = 1.0 + 1e-7 * float(np.abs(g).max(initial=0.0))
    return np.maximum(0, np.ceil(g - margin)).astype(np.int64)


def _finish(V, h, m, status):
    capped = status == _k.CAPPED
    # a capped run may stop mid-way through a warm start; clip for display only
    xi = HeightConfig(V, (np.maximum(h, 0) if capped else h).reshape(V.shape))
    m = m.reshape(V.shape)
    m.setflags(write=False)
    lost = int((m * lacking_array(V)).sum())
    return StabilizationResult(xi, m, int(m.sum()), lost, capped=capped)


def stabilize(eta, V=None, cap=DEFAULT_CAP, warm_start=None, m0=None):
    """Stabilize ``eta`` in its volume; return the minimal toppling vector.

    :param cap: per-site toppling cap; exceeding it returns a result with
        ``capped=True`` instead of raising
    :param warm_start: seed the odometer with :func:`odometer_lower_bound`;
        ``None`` decides by net excess mass. The result is identical either
        way (least action principle).
    :param m0: optional known lower bound on the odometer (e.g. from a
        nested sub-volume), same shape as V
    """
    V = _volume_of(eta, V)
    nbr = neighbor_table(V)
    h = eta.heights.reshape(-1).copy()
    if warm_start is None:
        warm_start = 64 <= V.size <= WARM_START_MAX_SITES and h.sum() > 2 * V.d * V.size
    m = np.zeros(V.size, dtype=np.int64)
    if warm_start:
        m = odometer_lower_bound(V, h)
    if m0 is not None:
        m = np.maximum(m, np.asarray(m0, dtype=np.int64).reshape(-1))
    if m.any():
        h = h - apply_toppling_matrix(V, m).reshape(-1)
    status = _k.stabilize_default(h, m, nbr, cap)
    return _finish(V, h, m, status)


def stabilize_with_order(eta, V=None, order_policy="queue", seed=0, cap=DEFAULT_CAP):
    """Stabilize with an explicit toppling order; (xi, m) never depend on it."""
    V = _volume_of(eta, V)
    if order_policy not in ORDER_POLICIES:
        raise ValueError(f"unknown order policy {order_policy!r}; choose from {ORDER_POLICIES}")
    if order_policy == "fifo-bulk":
        return stabilize(eta, V, cap=cap, warm_start=False)
    nbr = neighbor_table(V)
    h = eta.heights.reshape(-1).copy()
    m = np.zeros(V.size, dtype=np.int64)
    if order_policy == "parallel-sweep":
        status = _k.stabilize_sweep(h, m, nbr, cap)
    else:
        status = _k.stabilize_ordered(h, m, nbr, cap, _POLICY_CODES[order_policy], np.uint64(seed))
    return _finish(V, h, m, status)


def add(eta, x, k=1):
    """Copy of ``eta`` with ``k`` extra grains at site ``x``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    h = eta.heights.copy()
    h[tuple(c - a for c, a in zip(x, eta.volume.lo))] += k
    return HeightConfig(eta.volume, h)


def special_boundary_addition(V):
    """The field ``lambda_V``: grains equal to the number of missing neighbors."""
    return HeightConfig(V, lacking_array(V))


def rectangle_identity_check(eta, V=None):
    """Add ``lambda_V`` and stabilize; recurrent inputs topple every site once
    and come back unchanged.

    Returns ``(m, xi)``; raises :class:`IdentityViolation` otherwise.
    """
    V = _volume_of(eta, V)
    res = stabilize(eta + special_boundary_addition(V).heights, V, warm_start=False)
    if not ((res.m == 1).all() and res.xi == eta):
        raise IdentityViolation("boundary addition is not the identity: input is not recurrent", res.m, res.xi)
    return res.m, res.xi


def wave_decompose(eta, x, V=None, max_waves=DEFAULT_MAX_WAVES):
    """Add one grain at ``x`` to stable ``eta`` and relax wave by wave."""
    V = _volume_of(eta, V)
    if not eta.is_stable():
        raise ValueError("wave decomposition needs a stable configuration")
    nbr = neighbor_table(V)
    h = add(eta, x, 1).heights.reshape(-1).copy()
    m = np.zeros(V.size, dtype=np.int64)
    status, _, sites, offsets = _k.waves(h, m, nbr, V.index(tuple(x)), max_waves)
    if status == _k.NOT_A_WAVE:
        raise AssertionError("a site toppled twice within one wave")
    m = m.reshape(V.shape)
    m.setflags(write=False)
    xi = HeightConfig(V, h.reshape(V.shape))
    return WaveDecomposition(V, tuple(x), np.asarray(sites), np.asarray(offsets), xi, m, status == _k.CAPPED)


def is_simply_connected(S):
    """Whether the union of closed unit squares centered at ``S`` is simply connected (d=2).

    ``S`` is a boolean 2D mask or an iterable of 2D sites. Closed squares
    touching at a corner are joined, so ``S`` is tested for 8-connectivity
    and its complement (padded by a one-site halo, so the unbounded face is
    a single component) for 4-connectivity. The empty set is not connected.
    """
    mask = _as_mask(S)
    if mask is None or not mask.any():
        return False
    _, n_fg = scipy.ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n_fg != 1:
        return False
    padded = np.pad(~mask, 1, constant_values=True)
    _, n_bg = scipy.ndimage.label(padded)
    return n_bg == 1


def _as_mask(S):
    if isinstance(S, np.ndarray) and S.dtype == bool:
        if S.ndim != 2:
            raise NotImplementedError("simple connectivity is only implemented for d = 2")
        return S
    pts = np.array([tuple(p) for p in S], dtype=np.int64)
    if pts.size == 0:
        return None
    if pts.shape[1] != 2:
        raise NotImplementedError("simple connectivity is only implemented for d = 2")
    pts = pts - pts.min(axis=0)
    mask = np.zeros(tuple(pts.max(axis=0) + 1), dtype=bool)
    mask[pts[:, 0], pts[:, 1]] = True
    return mask
