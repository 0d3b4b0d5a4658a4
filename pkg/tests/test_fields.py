import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sandstab import rng
from sandstab.fields import (
    SamplerSpec,
    build_nested_lakes,
    compose_add,
    declared_mean,
    line_field,
    sample,
    sea_islands,
)
from sandstab.lattice import Volume
from sandstab.recurrence import density_estimate, is_recurrent

from oracles import ladder_recount


def test_constant_and_periodic():
    assert (sample(SamplerSpec("constant", {"value": 4}), Volume.box(5, 2)).heights == 4).all()
    h = sample(SamplerSpec.parse("periodic:31"), Volume((0,), (5,))).heights
    assert "".join(map(str, h)) == "313131"
    with pytest.raises(ValueError):
        sample(SamplerSpec.parse("periodic:31"), Volume.box(4, 2))


def test_parse_shorthands():
    assert SamplerSpec.parse("constant:6").params == {"value": 6}
    s = SamplerSpec.parse("iid:1=0.5,3=0.5", seed=4)
    assert s.kind == "iid-discrete" and s.seed == 4 and declared_mean(s) == 2.0
    assert SamplerSpec.parse("bernoulli:0.3").params["values"] == {0: 0.7, 1: 0.3}
    assert declared_mean(SamplerSpec.parse("poisson:3.5")) == 4.5
    assert SamplerSpec.parse("line-field:0.2").kind == "line-field"
    assert SamplerSpec.parse('{"kind": "umrc", "params": {}}', seed=9).seed == 9
    with pytest.raises(ValueError):
        SamplerSpec.parse("nonsense:1")


@pytest.mark.parametrize(
    "kind,params",
    [
        ("iid-discrete", {"values": {}}),
        ("iid-discrete", {"values": {1: 0.5, 2: 0.2}}),
        ("line-field", {"p": 1.5}),
        ("sea-islands", {"p": -0.1}),
        ("constant", {"value": -1}),
        ("d1-periodic", {"pattern": ""}),
        ("compose-add", {"a": {"kind": "constant", "params": {"value": 1}}}),
        ("bogus", {}),
    ],
)
def test_invalid_params(kind, params):
    with pytest.raises(ValueError):
        SamplerSpec(kind, params)


def test_json_roundtrip_and_canonical():
    s = SamplerSpec(
        "compose-add",
        {"a": {"kind": "umrc", "params": {}}, "b": {"kind": "line-field", "params": {"p": 0.2}}},
        seed=5,
    )
    assert SamplerSpec.from_json(s.canonical()) == s
    assert SamplerSpec.from_json(s.to_json()).canonical() == s.canonical()


SPECS = [
    SamplerSpec.parse("iid:1=0.3,2=0.2,4=0.5", seed=11),
    SamplerSpec.parse("poisson:2.5", seed=12),
    SamplerSpec.parse("line-field:0.4", seed=13),
    SamplerSpec.parse("constant:2"),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_deterministic_and_restriction_consistent(spec):
    big, small = Volume.box(30, 2), Volume((-3, 5), (8, 12))
    a, b = sample(spec, big), sample(spec, big)
    assert a == b
    assert a.restrict(small) == sample(spec, small)


@pytest.mark.parametrize("spec", SPECS[:3], ids=lambda s: s.kind)
def test_declared_mean_within_4_sigma(spec):
    est = density_estimate(spec, Volume.box(40, 2), n_samples=40, seed=3)
    assert abs(est.mean - declared_mean(spec)) < 4 * est.stderr


def test_iid_two_point_mean():
    s = SamplerSpec.parse("iid:1=0.5,3=0.5", seed=1)
    h = sample(s, Volume.box(200, 2)).heights
    assert set(np.unique(h)) == {1, 3}
    assert abs(h.mean() - 2.0) < 4 * 1.0 / 200


def test_line_field_degenerate():
    V = Volume.box(21, 2)
    zeta, ladder = line_field(SamplerSpec("line-field", {"p": 1.0}), V)
    assert (zeta.heights == 2).all()
    assert ladder.count == 10 and ladder.count_in(V) == 10
    zeta, ladder = line_field(SamplerSpec("line-field", {"p_x": 0.0, "p_y": 0.5}, 3), V)
    assert (zeta.heights == zeta.heights[:1, :]).all()
    assert ladder.count == 0
    with pytest.raises(ValueError):
        line_field(SamplerSpec("line-field", {"p": 0.5}), Volume.box(5, 1))


@pytest.mark.parametrize("seed", range(5))
def test_line_field_ladder_recount(seed):
    V = Volume.box(101, 2)
    spec = SamplerSpec("line-field", {"p": 0.5}, seed)
    zeta, ladder = line_field(spec, V)
    xs, ys = np.arange(-50, 51), np.arange(-50, 51)
    wx = rng.uniform_array(seed, rng.STREAM_LINE_X, xs + rng.SITE_OFFSET) < 0.5
    wy = rng.uniform_array(seed, rng.STREAM_LINE_Y, ys + rng.SITE_OFFSET) < 0.5
    assert np.array_equal(zeta.heights, wx[:, None].astype(int) + wy[None, :].astype(int))
    assert ladder.count == ladder_recount(wx, xs, wy, ys)
    for (a, b, c, d), (a2, b2, c2, d2) in zip(ladder.rectangles, ladder.rectangles[1:]):
        assert a2 < a < 0 < b < b2 and c2 < c < 0 < d < d2
    for a, b, c, d in ladder.rectangles:
        ring = [(a, y) for y in range(c, d + 1)] + [(b, y) for y in range(c, d + 1)]
        ring += [(x, c) for x in range(a, b + 1)] + [(x, d) for x in range(a, b + 1)]
        assert all(zeta[p] >= 1 for p in ring)
        assert all(zeta[p] == 2 for p in [(a, c), (a, d), (b, c), (b, d)])


def test_sea_islands():
    V = Volume.box(32, 2)
    base = SamplerSpec("umrc", {}, 2)
    assert (sea_islands(base, 1.0, V).heights == 4).all()
    assert sea_islands(base, 0.0, V) == sample(base, V)
    eta = sea_islands(base, 0.95, Volume.box(64, 2), seed=7)
    frac = (eta.heights == 4).mean()
    n = eta.heights.size
    assert is_recurrent(eta)
    assert frac >= 0.95 - 4 * np.sqrt(0.95 * 0.05 / n)


def test_compose_add():
    V = Volume.box(8, 2)
    a, b = SamplerSpec("constant", {"value": 2}), SamplerSpec("constant", {"value": 1})
    assert (compose_add(a, b, V, seed=1).heights == 3).all()
    spec = SamplerSpec("compose-add", {"a": a.to_json(), "b": b.to_json()})
    assert (sample(spec, V).heights == 3).all() and declared_mean(spec) == 3.0


def test_compose_umrc_plus_bernoulli_density():
    V = Volume.box(24, 2)
    umrc = density_estimate(SamplerSpec("umrc", {}), V, n_samples=30, seed=5, halo=6)
    comp = SamplerSpec(
        "compose-add",
        {"a": {"kind": "umrc", "params": {}}, "b": SamplerSpec.parse("bernoulli:0.3").to_json()},
    )
    est = density_estimate(comp, V, n_samples=30, seed=6, halo=6)
    assert abs(est.mean - (umrc.mean + 0.3)) < 4 * np.hypot(est.stderr, umrc.stderr)


def test_compose_umrc_plus_line_field_density():
    V = Volume.box(24, 2)
    umrc = density_estimate(SamplerSpec("umrc", {}), V, n_samples=30, seed=5, halo=6)
    comp = SamplerSpec(
        "compose-add", {"a": {"kind": "umrc", "params": {}}, "b": {"kind": "line-field", "params": {"p": 0.2}}}
    )
    est = density_estimate(comp, V, n_samples=30, seed=8, halo=6)
    assert abs(est.mean - (umrc.mean + 0.4)) < 4 * np.hypot(est.stderr, umrc.stderr)


@pytest.mark.parametrize("n,L", [(0, 5), (1, 7), (3, 25), (5, 41)])
def test_nested_lakes_recurrent(n, L):
    eta = build_nested_lakes(n, Volume.box(L, 2))
    assert is_recurrent(eta)
    if n == 0:
        assert (eta.heights == 4).all()
    for r in range(2, 2 * n + 1, 2):
        ring = [(x, y) for x in range(-r, r + 1) for y in range(-r, r + 1) if max(abs(x), abs(y)) == r]
        assert all(eta[p] == 4 for p in ring)


def test_nested_lakes_too_small():
    with pytest.raises(ValueError):
        build_nested_lakes(3, Volume.box(9, 2))


@settings(max_examples=20)
@given(st.integers(0, 2**40), st.floats(0, 1))
def test_heights_nonnegative(seed, p):
    for spec in (SamplerSpec("line-field", {"p": p}, seed), SamplerSpec.parse("poisson:1.5", seed)):
        assert sample(spec, Volume.box(6, 2)).heights.min() >= 0
