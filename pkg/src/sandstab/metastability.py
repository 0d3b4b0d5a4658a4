"""Waves after a single addition on sea-dominated recurrent configurations.

A *lake* here is an origin-centred square ring made only of height-``2d``
sites that belong to the same height-``2d`` component as the origin. Each
such ring forces one wave when a grain is added at the origin, so the
wave count is bounded below by the number of rings found.
"""
from dataclasses import dataclass

import numpy as np

from .fields import SamplerSpec, sample, sea_component
from .lattice import Volume
from .recurrence import is_recurrent
from .toppling import DEFAULT_MAX_WAVES, add, is_simply_connected, stabilize, wave_decompose


@dataclass(frozen=True)
class LakeStructure:
    """Rings at Chebyshev radii ``radii`` around ``origin``; disjoint by construction."""

    origin: tuple
    radii: tuple

    @property
    def count(self):
        return len(self.radii)

    def boundary(self, i):
        """Sites of the i-th ring."""
        r = self.radii[i]
        ox, oy = self.origin
        out = []
        for k in range(-r, r + 1):
            out += [(ox + k, oy - r), (ox + k, oy + r)]
        for k in range(-r + 1, r):
            out += [(ox - r, oy + k), (ox + r, oy + k)]
        return out

    def to_json(self):
        return {"origin": list(self.origin), "count": self.count, "radii": list(self.radii)}


def _ring_mask(shape, center_idx, r):
    X, Y = np.indices(shape)
    dist = np.maximum(np.abs(X - center_idx[0]), np.abs(Y - center_idx[1]))
    return dist == r


def detect_nested_lakes(eta, V=None, origin=(0, 0)):
    """Origin-centred square rings lying inside the origin's height-4 component.

    Returns a count of 0 when the origin is not at height 4.
    """
    V = eta.volume if V is None else V
    if V.d != 2:
        raise ValueError("lake detection needs d = 2")
    if not eta.is_stable():
        raise ValueError("lake detection needs a stable configuration")
    origin = tuple(origin)
    comp = sea_component(eta, origin)
    if not comp.any():
        return LakeStructure(origin, ())
    c = tuple(o - a for o, a in zip(origin, V.lo))
    r_max = min(c[0], c[1], V.shape[0] - 1 - c[0], V.shape[1] - 1 - c[1])
    radii = tuple(r for r in range(1, r_max + 1) if comp[_ring_mask(V.shape, c, r)].all())
    return LakeStructure(origin, radii)


@dataclass(frozen=True)
class MetastabilityReport:
    origin: tuple
    origin_height: int
    wave_count: int
    nested_lakes: int
    simply_connected: list
    blow_up: bool
    wave_sum_exact: bool
    first_wave_is_volume: bool
    total_topplings: int

    def to_json(self):
        return {
            "origin": list(self.origin),
            "origin_height": self.origin_height,
            "wave_count": self.wave_count,
            "nested_lakes": self.nested_lakes,
            "all_simply_connected": all(self.simply_connected),
            "simply_connected": list(self.simply_connected),
            "blow_up": self.blow_up,
            "wave_sum_exact": self.wave_sum_exact,
            "first_wave_is_volume": self.first_wave_is_volume,
            "total_topplings": self.total_topplings,
        }


def metastability_probe(eta, V=None, origin=(0, 0), max_waves=DEFAULT_MAX_WAVES, check_recurrent=True):
    """Add a grain at ``origin``, split the relaxation into waves and check them.

    Asserted: every wave support is simply connected, the waves add up to
    the full stabilization (unless the wave cap was hit, which sets
    ``blow_up``), and the wave count is at least the number of nested
    lakes when the origin sits in the height-4 sea.
    """
    V = eta.volume if V is None else V
    if V.d != 2:
        raise ValueError("metastability probe needs d = 2")
    if check_recurrent and not is_recurrent(eta, V):
        raise ValueError("input must be recurrent")
    origin = tuple(origin)
    lakes = detect_nested_lakes(eta, V, origin)
    h0 = eta[origin]
    wd = wave_decompose(eta, origin, V, max_waves=max_waves)
    connected = [is_simply_connected(mask) for mask in wd.supports()]
    if not all(connected):
        bad = connected.index(False)
        raise AssertionError(f"wave {bad} support is not simply connected")
    exact = False
    if not wd.capped:
        full = stabilize(add(eta, origin), V, warm_start=False)
        exact = bool(np.array_equal(full.m, wd.m) and full.xi == wd.xi)
        if not exact:
            raise AssertionError("waves do not add up to the full stabilization")
        if h0 == 2 * V.d and wd.count < lakes.count:
            raise AssertionError(f"{wd.count} waves but {lakes.count} nested lakes")
    first_full = wd.count > 0 and bool(wd.support_mask(0).all())
    return MetastabilityReport(
        origin, h0, wd.count, lakes.count, connected, bool(wd.capped), exact, first_full, int(wd.m.sum())
    )


def sea_islands_sweep(p_list, sizes, seeds, max_waves=DEFAULT_MAX_WAVES, base=None):
    """Wave counts after one addition at the origin over a (p, L, seed) grid.

    Returns one row per cell plus a summary per (p, L) with the mean wave
    count and the blow-up rate. Trends are reported, not asserted.
    """
    base = SamplerSpec("umrc", {}) if base is None else base
    rows = []
    for p in p_list:
        for L in sizes:
            V = Volume.box(int(L), 2)
            for s in seeds:
                spec = SamplerSpec("sea-islands", {"p": float(p), "base": dict(base.params)}, s)
                eta = sample(spec, V)
                rep = metastability_probe(eta, V, max_waves=max_waves, check_recurrent=False)
                rows.append(
                    {
                        "p": float(p),
                        "L": int(L),
                        "seed": int(s),
                        "origin_height": rep.origin_height,
                        "waves": rep.wave_count,
                        "lakes": rep.nested_lakes,
                        "blow_up": rep.blow_up,
                        "topplings": rep.total_topplings,
                    }
                )
    summary = []
    for p in p_list:
        for L in sizes:
            cell = [r for r in rows if r["p"] == float(p) and r["L"] == int(L)]
            summary.append(
                {
                    "p": float(p),
                    "L": int(L),
                    "mean_waves": float(np.mean([r["waves"] for r in cell])),
                    "max_waves": int(max(r["waves"] for r in cell)),
                    "blow_up_rate": float(np.mean([r["blow_up"] for r in cell])),
                }
            )
    return rows, summary
