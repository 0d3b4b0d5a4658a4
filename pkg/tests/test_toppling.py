import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandstab.config import HeightConfig
from sandstab.lattice import Volume, apply_toppling_matrix, lacking_array
from sandstab.toppling import (
    ORDER_POLICIES,
    IdentityViolation,
    add,
    is_simply_connected,
    odometer_lower_bound,
    rectangle_identity_check,
    special_boundary_addition,
    stabilize,
    stabilize_with_order,
    wave_decompose,
)

from oracles import naive_stabilize


@st.composite
def instances(draw, max_side=8, max_h=8, dims=(1, 2)):
    d = draw(st.sampled_from(dims))
    shape = tuple(draw(st.integers(1, max_side)) for _ in range(d))
    lo = tuple(draw(st.integers(-4, 4)) for _ in range(d))
    V = Volume(lo, tuple(a + s - 1 for a, s in zip(lo, shape)))
    h = draw(st.lists(st.integers(0, max_h), min_size=V.size, max_size=V.size))
    return HeightConfig(V, np.array(h).reshape(shape))


def _check_identity(eta, res):
    V = eta.volume
    assert np.array_equal(eta.heights - apply_toppling_matrix(V, res.m), res.xi.heights)
    assert res.xi.is_stable()
    assert eta.total() == res.xi.total() + int((res.m * lacking_array(V)).sum())
    assert res.grains_lost == int((res.m * lacking_array(V)).sum())


def test_examples():
    V = Volume((0, 0), (1, 1))
    res = stabilize(HeightConfig.constant(V, 5))
    assert res.xi.heights.tolist() == [[3, 3], [3, 3]]
    assert res.m.tolist() == [[1, 1], [1, 1]] and res.grains_lost == 8
    res = stabilize(HeightConfig(Volume((0,), (0,)), [3]))
    assert res.xi.heights.tolist() == [1] and res.m.tolist() == [1] and res.grains_lost == 2
    stable = HeightConfig.constant(Volume.box(5, 2), 4)
    res = stabilize(stable)
    assert res.total_topplings == 0 and res.xi == stable


@settings(max_examples=200)
@given(instances(dims=(1, 2, 3), max_side=6))
def test_identity_and_conservation(eta):
    _check_identity(eta, stabilize(eta))


@settings(max_examples=100)
@given(instances())
def test_matches_naive_oracle(eta):
    xi, m = naive_stabilize(eta.heights)
    res = stabilize(eta)
    assert np.array_equal(res.m, m) and np.array_equal(res.xi.heights, xi)


@settings(max_examples=60)
@given(instances(max_side=7), st.integers(0, 2**32))
def test_order_policies_agree(eta, seed):
    ref = stabilize(eta, warm_start=False)
    for policy in ORDER_POLICIES:
        res = stabilize_with_order(eta, order_policy=policy, seed=seed)
        assert np.array_equal(res.m, ref.m), policy
        assert res.xi == ref.xi, policy


def test_unknown_policy():
    with pytest.raises(ValueError):
        stabilize_with_order(HeightConfig.constant(Volume.box(2, 2), 1), order_policy="lifo")


@pytest.mark.parametrize("L,d,value", [(40, 2, 7), (300, 1, 3), (12, 3, 9)])
def test_warm_start_identical(L, d, value):
    V = Volume.box(L, d)
    eta = HeightConfig(V, 1 + (np.arange(V.size).reshape(V.shape) * 7919) % value)
    cold = stabilize(eta, warm_start=False)
    warm = stabilize(eta, warm_start=True)
    assert np.array_equal(cold.m, warm.m) and cold.xi == warm.xi
    assert (odometer_lower_bound(V, eta.heights) <= cold.m.reshape(-1)).all()


def test_m0_hint_from_subvolume():
    big, small = Volume.box(30, 2), Volume.box(20, 2)
    eta = HeightConfig.constant(big, 6)
    m_small = stabilize(eta.restrict(small)).m
    hint = np.zeros(big.shape, dtype=np.int64)
    hint[small.slices_in(big)] = m_small
    assert np.array_equal(stabilize(eta, m0=hint).m, stabilize(eta, warm_start=False).m)


def test_cap_flags_result():
    res = stabilize(HeightConfig.constant(Volume.box(20, 2), 8), cap=3, warm_start=False)
    assert res.capped


def test_add():
    eta = HeightConfig.constant(Volume.box(3, 2), 1)
    assert add(eta, (1, -1), 3)[(1, -1)] == 4
    with pytest.raises(ValueError):
        add(eta, (0, 0), -1)


def test_special_boundary_addition():
    lam = special_boundary_addition(Volume((0, 0), (3, 2)))
    assert lam[(0, 0)] == 2 and lam[(1, 0)] == 1 and lam[(1, 1)] == 0


def test_rectangle_identity_all_4():
    eta = HeightConfig.constant(Volume.box(4, 2), 4)
    m, xi = rectangle_identity_check(eta)
    assert (m == 1).all() and xi == eta


def test_rectangle_identity_rejects_non_recurrent():
    with pytest.raises(IdentityViolation):
        rectangle_identity_check(HeightConfig.constant(Volume.box(4, 2), 1))


def test_waves_on_all_4_sum_to_full_stabilization():
    V = Volume.box(11, 2)
    eta = HeightConfig.constant(V, 4)
    wd = wave_decompose(eta, (0, 0))
    full = stabilize(add(eta, (0, 0)), warm_start=False)
    assert wd.count == 6
    assert wd.support_mask(0).all()
    assert np.array_equal(sum(wd.wave_vector(w) for w in range(wd.count)), full.m)
    assert wd.xi == full.xi
    assert all(wd.support(w)[0] == (0, 0) for w in range(wd.count))


def test_waves_stable_origin_no_wave():
    eta = HeightConfig.constant(Volume.box(5, 2), 3)
    assert wave_decompose(eta, (0, 0)).count == 0


def test_waves_cap():
    wd = wave_decompose(HeightConfig.constant(Volume.box(21, 2), 4), (0, 0), max_waves=2)
    assert wd.capped and wd.count == 2


def test_wave_needs_stable_input():
    with pytest.raises(ValueError):
        wave_decompose(HeightConfig.constant(Volume.box(3, 2), 5), (0, 0))


@pytest.mark.parametrize(
    "sites,expected",
    [
        ([(0, 0)], True),
        ([(0, 0), (1, 1)], True),  # closed squares meet at a corner
        ([(0, 1), (1, 0), (1, 2), (2, 1)], False),  # diamond encloses the centre point
        ([(x, y) for x in range(3) for y in range(3) if (x, y) != (1, 1)], False),
        ([(x, y) for x in range(3) for y in range(3)], True),
        ([(0, 0), (3, 3)], False),
        ([], False),
    ],
)
def test_simply_connected_examples(sites, expected):
    assert is_simply_connected(sites) is expected


def test_simply_connected_mask_and_dims():
    assert is_simply_connected(np.ones((4, 4), dtype=bool))
    with pytest.raises(NotImplementedError):
        is_simply_connected([(0, 0, 0)])
