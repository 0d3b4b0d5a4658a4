"""Activated random walkers in a finite box: Poisson clocks of rate 1 on
every site, and a ring topples its site once if (and only if) it is
unstable. Topplings use the finite-volume operator ``Delta_V``.

In finite volume the run reaches the same final configuration and the
same toppling counts as :func:`~sandstab.toppling.stabilize`; the event
loop checks ``config = initial - Delta_V n`` and ``n <= rings`` on a
doubling schedule of event counts.
"""
from dataclasses import dataclass
import math

import numpy as np

from .config import HeightConfig
from .kernels import arw as _k
from .lattice import apply_toppling_matrix, lacking_array, neighbor_table

DEFAULT_MAX_EVENTS = 10**9


@dataclass(frozen=True, eq=False)
class ArwState:
    """Snapshot of a run.

    ``rings[x]`` counts clock rings of ``x`` up to time ``t``;
    ``n[x] <= rings[x]`` always.
    """

    config: HeightConfig
    t: float
    n: np.ndarray
    rings: np.ndarray
    quiescent: bool
    events: int


class _Sim:
    def __init__(self, initial, V, seed):
        self.V = V
        self.initial = initial
        self.seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
        self.nbr = neighbor_table(V)
        self.h = initial.heights.reshape(-1).copy()
        size = V.size
        self.n = np.zeros(size, dtype=np.int64)
        self.rings = np.zeros(size, dtype=np.int64)
        with np.errstate(over="ignore"):
            self.next_time = np.asarray(_k.first_rings(self.seed, size))
        self.scheduled = self.h > 2 * V.d
        self.t = 0.0
        self.events = 0
        self.quiescent = not self.scheduled.any()
        self.lacking = lacking_array(V).reshape(-1)
        self.total0 = int(self.h.sum())

    def check(self):
        V = self.V
        expect = self.initial.heights - apply_toppling_matrix(V, self.n.reshape(V.shape))
        if not np.array_equal(expect.reshape(-1), self.h):
            raise AssertionError("configuration differs from initial - Delta_V n")
        if (self.n > self.rings).any():
            raise AssertionError("a site toppled more often than its clock rang")
        if int(self.h.sum()) != self.total0 - int((self.n * self.lacking).sum()):
            raise AssertionError("grain balance violated")

    def run(self, t_limit, max_events):
        budget = 1
        while not self.quiescent and self.events < max_events:
            chunk = min(budget, max_events - self.events)
            with np.errstate(over="ignore"):
                status, t_last, done = _k.run_events(
                    self.h, self.n, self.rings, self.next_time, self.scheduled, self.nbr,
                    self.seed, float(t_limit), chunk,
                )
            self.events += int(done)
            if done:
                self.t = float(t_last)
            if status == _k.ILLEGAL:
                raise AssertionError("a clock ring found its site stable")
            self.check()
            if status == _k.QUIESCENT:
                self.quiescent = True
            elif status == _k.TIME_LIMIT:
                break
            budget *= 2

    def advance(self, t):
        with np.errstate(over="ignore"):
            _k.advance_clocks(self.rings, self.next_time, self.seed, float(t))
        self.t = max(self.t, float(t))

    def state(self):
        V = self.V
        n = self.n.reshape(V.shape).copy()
        rings = self.rings.reshape(V.shape).copy()
        n.setflags(write=False)
        rings.setflags(write=False)
        return ArwState(HeightConfig(V, self.h.reshape(V.shape)), self.t, n, rings, self.quiescent, self.events)


def arw_run(initial, V=None, t_max=None, until_quiescent=True, seed=0, max_events=DEFAULT_MAX_EVENTS):
    """Run the clock-driven dynamics.

    :param t_max: stop at this time (the state is then flagged non-final
        unless already quiescent); ``None`` means run to quiescence
    :param until_quiescent: required when ``t_max`` is ``None``
    """
    V = initial.volume if V is None else V
    if t_max is None and not until_quiescent:
        raise ValueError("give t_max or until_quiescent=True")
    sim = _Sim(initial, V, seed)
    limit = math.inf if t_max is None else float(t_max)
    sim.run(limit, max_events)
    sim.advance(sim.t if t_max is None else t_max)
    sim.check()
    return sim.state()


def arw_trace(initial, t_grid, V=None, seed=0, max_events=DEFAULT_MAX_EVENTS):
    """Sample ``(t, unstable sites, total topplings)`` at the times in ``t_grid``.

    At each sampled time the clock bound ``n <= rings`` is asserted.
    """
    V = initial.volume if V is None else V
    sim = _Sim(initial, V, seed)
    rows = []
    for t in sorted(float(v) for v in t_grid):
        sim.run(t, max_events)
        sim.advance(t)
        if (sim.n > sim.rings).any():
            raise AssertionError(f"clock bound violated at t={t}")
        rows.append({"t": t, "unstable": int((sim.h > 2 * V.d).sum()), "total_topplings": int(sim.n.sum())})
    return rows
