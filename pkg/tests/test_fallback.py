"""The numpy/pure-Python paths must reproduce the numba paths exactly."""
import json
import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from sandstab.kernels import HAS_NUMBA, burning, topple, walks
from sandstab.lattice import Volume, neighbor_table

SCRIPT = r"""
import json
import numpy as np
from sandstab import HAS_NUMBA, HeightConfig, SamplerSpec, Volume, sample, stabilize
from sandstab.arw import arw_run
from sandstab.lattice import martingale_mean, rw_visits_estimate
from sandstab.recurrence import count_recurrent, is_recurrent, umrc_chain
from sandstab.toppling import stabilize_with_order, wave_decompose

out = {"has_numba": HAS_NUMBA}
eta = sample(SamplerSpec.parse("iid:2=0.5,7=0.5", seed=3), Volume.box(12, 2))
res = stabilize(eta)
out["m"] = res.m.tolist()
out["random_order"] = stabilize_with_order(eta, order_policy="random", seed=5).m.tolist()
out["count2x2"] = count_recurrent(Volume.box(2, 2))
out["umrc"] = next(umrc_chain(Volume.box(8, 2), seed=2, n_samples=1)).heights.tolist()
out["burn"] = is_recurrent(HeightConfig.constant(Volume.box(5, 2), 3))
wd = wave_decompose(HeightConfig.constant(Volume.box(9, 2), 4), (0, 0))
out["waves"] = np.asarray(wd.offsets).tolist()
out["visits"] = rw_visits_estimate(Volume.box(6, 2), (0, 0), (1, 1), 300, 4)
out["mart"] = martingale_mean(lambda x: x[0] ** 2 + x[1] ** 2, Volume.box(7, 2), 300, 50, 6)
a = arw_run(HeightConfig.constant(Volume.box(5, 2), 5), seed=8)
out["arw"] = [a.t, a.events, a.n.tolist(), a.rings.tolist()]
print(json.dumps(out))
"""


def _run(no_numba):
    env = dict(os.environ)
    env.pop("SANDSTAB_NO_NUMBA", None)
    if no_numba:
        env["SANDSTAB_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def test_env_flag_switches_and_results_agree():
    fast, slow = _run(False), _run(True)
    assert fast.pop("has_numba") == HAS_NUMBA
    assert slow.pop("has_numba") is False
    assert fast == slow


@st.composite
def flat_cases(draw):
    a, b = draw(st.integers(1, 9)), draw(st.integers(1, 9))
    V = Volume((0, 0), (a - 1, b - 1))
    h = np.array(draw(st.lists(st.integers(0, 12), min_size=V.size, max_size=V.size)), dtype=np.int64)
    return V, h


@settings(max_examples=80)
@given(flat_cases())
def test_stabilize_kernels_agree(case):
    V, h = case
    nbr = neighbor_table(V)
    h1, m1 = h.copy(), np.zeros(V.size, dtype=np.int64)
    h2, m2 = h.copy(), np.zeros(V.size, dtype=np.int64)
    topple._stabilize_fifo_nb(h1, m1, nbr, 10**9)
    topple._stabilize_sweep_np(h2, m2, nbr, 10**9)
    assert np.array_equal(m1, m2) and np.array_equal(h1, h2)


@settings(max_examples=80)
@given(flat_cases())
def test_peel_kernels_agree(case):
    V, h = case
    h = np.clip(h, 1, 4)
    nbr = neighbor_table(V)
    assert np.array_equal(burning._peel_nb(h, nbr), burning._peel_np(h, nbr))


@settings(max_examples=40)
@given(flat_cases())
def test_wave_kernels_agree(case):
    V, h = case
    h = np.clip(h, 1, 4)
    nbr = neighbor_table(V)
    origin = V.size // 2
    h[origin] += 1
    h1, m1, h2, m2 = h.copy(), np.zeros(V.size, np.int64), h.copy(), np.zeros(V.size, np.int64)
    s1 = topple._waves_nb(h1, m1, nbr, origin, 10**6)
    s2 = topple._waves_np(h2, m2, nbr, origin, 10**6)
    assert s1[0] == s2[0] and s1[1] == s2[1]
    assert np.array_equal(np.asarray(s1[3]), np.asarray(s2[3]))
    assert np.array_equal(m1, m2) and np.array_equal(h1, h2)
    for w in range(s1[1]):
        a = np.sort(np.asarray(s1[2])[s1[3][w] : s1[3][w + 1]])
        b = np.sort(np.asarray(s2[2])[s2[3][w] : s2[3][w + 1]])
        assert np.array_equal(a, b)


def test_walk_kernels_agree():
    V = Volume.box(7, 2)
    nbr = neighbor_table(V)
    x = V.index((0, 0))
    a = walks._count_visits_nb(nbr, x, x, 500, np.uint64(3), 10**6)
    b = walks._count_visits_np(nbr, x, x, 500, np.uint64(3), 10**6)
    assert np.array_equal(a, b)
