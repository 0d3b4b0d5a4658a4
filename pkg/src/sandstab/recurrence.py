"""Recurrent configurations: the burning test, equivalence classes modulo
``Delta_V``, the uniform-recurrent Markov chain and density estimates."""
from dataclasses import dataclass
import itertools
import math

import numpy as np

from . import rng
from .config import HeightConfig
from .kernels import burning as _burn
from .lattice import bandwidth, neighbor_table
from .linalg import BandedRationalLU
from .toppling import special_boundary_addition, stabilize

BURN_IN_FACTOR = 20
MIN_BURN_IN_FACTOR = 1
MINIMAL_ENUMERATION_CAP = 12


@dataclass(frozen=True, eq=False)
class ForbiddenWitness:
    """A set ``W`` on which no height exceeds its number of neighbors in ``W``."""

    mask: np.ndarray
    heights: np.ndarray

    def sites(self, V):
        return [V.site(i) for i in np.flatnonzero(self.mask.reshape(-1))]


@dataclass(frozen=True, eq=False)
class EquivalenceCertificate:
    """Signed integer ``m`` with ``eta - xi = Delta_V m``."""

    m: np.ndarray


def find_forbidden(eta, V=None):
    """Peel sites whose height beats their remaining neighbor count.

    Returns ``None`` if everything peels (``eta`` allowed), else the
    witness formed by the surviving sites.
    """
    V = eta.volume if V is None else V
    alive = _burn.peel(eta.heights.reshape(-1), neighbor_table(V))
    if not alive.any():
        return None
    mask = np.asarray(alive).reshape(V.shape)
    return ForbiddenWitness(mask, np.where(mask, eta.heights, 0))


def is_recurrent(eta, V=None):
    if not eta.is_stable():
        raise ValueError("recurrence is defined for stable configurations")
    return find_forbidden(eta, V) is None


def recurrent_representative(eta, V=None, max_iter=None):
    """The unique recurrent configuration equivalent to ``eta`` mod ``Delta_V``.

    Iterates ``zeta <- stab(zeta + lambda_V)``; the fixed points are exactly
    the recurrent configurations (every site topples once).
    """
    V = eta.volume if V is None else V
    beta = special_boundary_addition(V).heights
    if max_iter is None:
        max_iter = 10 * sum(V.shape) + 100
    zeta = eta
    for _ in range(max_iter):
        res = stabilize(zeta + beta, V)
        if (res.m == 1).all():
            return res.xi
        zeta = res.xi
    raise RuntimeError(f"no fixed point after {max_iter} boundary additions (internal error)")


def equivalence_check(eta, xi, V=None):
    """Solve ``Delta_V m = eta - xi`` exactly; certificate iff ``m`` is integral."""
    V = eta.volume if V is None else V
    if xi.volume != V:
        raise ValueError("configurations live on different volumes")
    rhs = (eta.heights - xi.heights).reshape(-1).tolist()
    sol = BandedRationalLU(neighbor_table(V), bandwidth(V)).solve(rhs)
    if any(v.denominator != 1 for v in sol):
        return None
    m = np.array([int(v) for v in sol], dtype=np.int64).reshape(V.shape)
    return EquivalenceCertificate(m)


def _chain_sites(seed, start, count, n):
    return rng.randbelow_array(seed, rng.STREAM_CHAIN, np.arange(start, start + count, dtype=np.int64), n)


def umrc_chain(V, burn_in=None, stride=None, seed=0, n_samples=None, start=None):
    """Yield recurrent configurations from the add-one-grain-and-relax chain.

    Step ``t`` adds a grain at a uniform site drawn from the counter-based
    stream keyed by ``(seed, t)``. Steps between emissions are applied as a
    single batched addition followed by one relaxation; by abelianness this
    is the same state the one-grain-at-a-time chain reaches.

    :param burn_in: steps before the first emission, default ``20 |V|``
        (must be at least ``|V|``)
    :param stride: steps between emissions, default ``|V|``. On the 2x2
        box the chain has period 2 (total height parity flips each step),
        so an even stride only visits half of the recurrent class there.
    :param start: recurrent start; default all-2d
    """
    n = V.size
    burn_in = BURN_IN_FACTOR * n if burn_in is None else int(burn_in)
    stride = n if stride is None else int(stride)
    if burn_in < MIN_BURN_IN_FACTOR * n:
        raise ValueError(f"burn_in must be at least {MIN_BURN_IN_FACTOR} x |V| = {MIN_BURN_IN_FACTOR * n}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    current = HeightConfig.constant(V, 2 * V.d) if start is None else start
    t = 0
    batch = burn_in
    emitted = 0
    while n_samples is None or emitted < n_samples:
        sites = _chain_sites(seed, t, batch, n)
        t += batch
        extra = np.bincount(sites, minlength=n).reshape(V.shape)
        current = stabilize(current + extra, V).xi
        yield current
        emitted += 1
        batch = stride


@dataclass(frozen=True)
class DensityEstimate:
    mean: float
    stderr: float
    n_samples: int
    sample_means: tuple


def density_estimate(sampler, V, region=None, n_samples=100, seed=None, halo=None):
    """Mean height over ``region`` (default: ``V`` shrunk by ``halo``) and samples.

    ``sampler`` is a :class:`~sandstab.fields.SamplerSpec`. UMRC samples come
    from one chain (spaced by its stride); other kinds use independent
    derived seeds. The stderr treats sample means as independent.
    """
    from . import fields

    if region is None:
        region = V if not halo else V.grow(-halo)
    if not V.contains_volume(region):
        raise ValueError("region must lie inside V")
    if seed is not None:
        sampler = sampler.with_seed(seed)
    sl = region.slices_in(V)
    if sampler.kind == "umrc":
        p = sampler.params
        stream = umrc_chain(V, p.get("burn_in"), p.get("stride"), sampler.seed, n_samples)
        means = [float(c.heights[sl].mean()) for c in stream]
    else:
        means = [
            float(fields.sample(sampler.with_seed(rng.derive_seed(sampler.seed, i)), V).heights[sl].mean())
            for i in range(n_samples)
        ]
    means = np.array(means)
    err = float(means.std(ddof=1) / math.sqrt(len(means))) if len(means) > 1 else 0.0
    return DensityEstimate(float(means.mean()), err, len(means), tuple(means.tolist()))


def enumerate_stable(V):
    """All stable configurations with heights in 1..2d (small V only)."""
    n = V.size
    top = 2 * V.d
    if top**n > 5_000_000:
        raise ValueError("too many configurations to enumerate")
    grid = np.array(list(itertools.product(range(1, top + 1), repeat=n)), dtype=np.int64)
    return grid


def recurrent_mask(V, configs):
    """Burning verdict for each row of a flat configuration batch."""
    return np.asarray(_burn.peel_batch(np.ascontiguousarray(configs, dtype=np.int64), neighbor_table(V)))


def count_recurrent(V):
    return int(recurrent_mask(V, enumerate_stable(V)).sum())


def minimal_recurrent_configs(V):
    """All minimal recurrent configurations of a tiny volume.

    Minimal recurrent configurations are exactly the recurrent ones of
    total height ``|V| + |E(V)|`` (one plus the out-degree of an acyclic
    orientation), so only that level set is scanned. Capped at 12 sites.
    """
    if V.size > MINIMAL_ENUMERATION_CAP:
        raise ValueError(f"exhaustive enumeration capped at {MINIMAL_ENUMERATION_CAP} sites")
    nbr = neighbor_table(V)
    edges = int((nbr >= 0).sum()) // 2
    target = V.size + edges
    top = 2 * V.d
    out = []
    for chunk in _level_set(V.size, top, target):
        keep = recurrent_mask(V, chunk)
        out.extend(HeightConfig(V, row.reshape(V.shape)) for row in chunk[keep])
    return out


def _level_set(n, top, total, chunk=200_000):
    buf = []
    for combo in itertools.product(range(1, top + 1), repeat=n - 1):
        last = total - sum(combo)
        if 1 <= last <= top:
            buf.append(combo + (last,))
            if len(buf) == chunk:
                yield np.array(buf, dtype=np.int64)
                buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)
