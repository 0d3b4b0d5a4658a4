from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sandstab.config import HeightConfig
from sandstab.fields import SamplerSpec, line_field, sample
from sandstab.lattice import Volume
from sandstab.prober import (
    DIVERGING,
    INCONCLUSIVE,
    STABILIZABLE,
    Policy,
    centered_volumes,
    classify,
    counterexample_6bar,
    critical_bracket,
    d1_exact_check,
    default_schedule,
    family_sampler,
    green_identity_check,
    line_field_probe,
    nested_probe,
    rectangle_lower_bound,
    six_bar_identity,
)

from oracles import naive_stabilize

D1_LONG = [64 * 2**k for k in range(7)]


def test_default_schedules():
    assert default_schedule(2) == [8, 16, 32, 64, 128]
    assert default_schedule(1)[-1] == 4096 and default_schedule(1)[0] == 8


@pytest.mark.parametrize(
    "m0,cls",
    [([3, 3, 3, 3], STABILIZABLE), ([2, 7, 19, 44], DIVERGING), ([2, 5, 5, 6], INCONCLUSIVE), ([0, 0, 0, 0], STABILIZABLE)],
)
def test_classify_examples(m0, cls):
    assert classify(m0).cls == cls


def test_classify_min_growth_and_length():
    assert classify([1, 2, 3, 4], Policy(min_growth=2)).cls == INCONCLUSIVE
    with pytest.raises(ValueError):
        classify([1, 2, 3])


@given(st.lists(st.integers(0, 1000), min_size=4, max_size=8))
def test_classify_is_pure_and_consistent(m0):
    m0 = sorted(m0)
    a, b = classify(m0), classify(list(m0))
    assert a == b
    inc = np.diff(m0)
    if a.cls == DIVERGING:
        assert (inc > 0).all()
    if a.cls == STABILIZABLE:
        assert inc[-1] == 0 and inc[-2] == 0


def test_nested_probe_constant_stable():
    series = nested_probe(SamplerSpec("constant", {"value": 4}), centered_volumes([8, 16, 32, 64], 2))
    assert series.m0 == [0, 0, 0, 0]


def test_nested_probe_periodic_31_grows():
    series = nested_probe(SamplerSpec.parse("periodic:31"), centered_volumes([8 * 2**k for k in range(8)], 1))
    assert all(b > a for a, b in zip(series.m0, series.m0[1:]))
    assert classify(series).cls == DIVERGING


def test_nested_probe_iid_above_2d_diverges():
    series = nested_probe(family_sampler("poisson", 4.5, 3), centered_volumes([8, 16, 32, 64], 2))
    assert classify(series).cls == DIVERGING


def test_nested_probe_rejects_bad_schedule():
    with pytest.raises(ValueError):
        nested_probe(SamplerSpec.parse("constant:1"), centered_volumes([16, 8], 2))
    with pytest.raises(ValueError):
        nested_probe(SamplerSpec.parse("constant:1"), [Volume((5, 5), (6, 6)), Volume((0, 0), (9, 9))])


def test_nested_probe_cap_is_recorded():
    series = nested_probe(SamplerSpec.parse("constant:8"), centered_volumes([8, 16, 32, 64], 2), cap=50)
    assert series.caps_hit[-1]
    assert classify(series).cls == INCONCLUSIVE


def test_green_check_stable_is_zero():
    g = green_identity_check(HeightConfig.constant(Volume.box(6, 2), 2))
    assert g.m0 == 0 and g.residual == 0 and g.integer_form


def test_green_check_constant_5_on_3x3():
    eta = HeightConfig.constant(Volume.box(3, 2), 5)
    g = green_identity_check(eta)
    _, m = naive_stabilize(eta.heights)
    assert g.residual == Fraction(0) and g.m0 == m[1, 1] and g.mode == "exact"


@pytest.mark.parametrize("seed", range(4))
def test_green_check_8x8_exact(seed):
    eta = sample(SamplerSpec.parse("iid:1=0.2,6=0.4,9=0.4", seed), Volume.box(8, 2))
    g = green_identity_check(eta)
    assert g.residual == 0 and g.integer_form and g.m0 > 0


def test_green_check_integer_fallback():
    eta = sample(SamplerSpec.parse("poisson:4", 1), Volume.box(12, 2))
    g = green_identity_check(eta, exact_cap=100)
    assert g.mode == "integer" and g.residual is None and g.integer_form


def test_family_sampler():
    s = family_sampler("two-point:1,3", 2.2, 4)
    assert s.seed == 4 and s.params["values"][3] == pytest.approx(0.6)
    with pytest.raises(ValueError):
        family_sampler("two-point:1,3", 3.5)
    with pytest.raises(ValueError):
        family_sampler("mystery", 2)


def test_bracket_d1_two_point_contains_2():
    b = critical_bracket("two-point:1,3", 1.55, 2.35, 0.1, centered_volumes(D1_LONG, 1), seeds=range(5))
    assert b.converged and b.lo < 2.0 < b.hi and b.hi - b.lo <= 0.1 + 1e-9
    assert b.points[0]["verdict"] == STABILIZABLE and b.points[1]["verdict"] == DIVERGING


def test_bracket_endpoint_errors():
    V_list = centered_volumes(D1_LONG[:4], 1)
    with pytest.raises(ValueError):
        critical_bracket("two-point:1,3", 2.3, 2.5, 0.1, V_list, seeds=range(3))
    with pytest.raises(ValueError):
        critical_bracket("two-point:1,3", 2.0, 1.5, 0.1, V_list)


def test_d2_iid_above_2d_diverging_endpoint():
    from sandstab.prober import majority_verdict

    cls, _ = majority_verdict("poisson", 4.5, centered_volumes([8, 16, 32, 64], 2), range(5))
    assert cls == DIVERGING


def test_line_field_umrc_diverges_below_4():
    series, bounds = line_field_probe(0.2, centered_volumes([25, 51, 75, 101], 2), seed=0)
    assert classify(series).cls == DIVERGING
    assert all(m >= c for m, c in bounds)


def test_rectangle_bound_degenerate_p1():
    V = Volume.box(21, 2)
    zeta, ladder = line_field(SamplerSpec("line-field", {"p": 1.0}), V)
    base = sample(SamplerSpec("umrc", {}, 1), V)
    m0, count = rectangle_lower_bound(zeta, ladder, base, V)
    assert count == 10 and m0 >= 10


def test_rectangle_bound_empty_ladder():
    V = Volume.box(15, 2)
    zeta, ladder = line_field(SamplerSpec("line-field", {"p": 0.0}), V)
    base = sample(SamplerSpec("umrc", {}, 1), V)
    assert rectangle_lower_bound(zeta, ladder, base, V)[1] == 0


@pytest.mark.parametrize(
    "text,expected",
    [("iid:1=0.6,3=0.4", STABILIZABLE), ("iid:1=0.4,3=0.6", DIVERGING), ("periodic:31", DIVERGING)],
)
def test_d1_exact_check(text, expected):
    rep = d1_exact_check(SamplerSpec.parse(text), D1_LONG, seeds=range(5))
    assert rep["contradictions"] == 0
    assert rep["verdicts"] == {expected: 5}
    assert rep["boundary"] == (text == "periodic:31")


def test_six_bar():
    assert six_bar_identity(50) == 0
    rep = counterexample_6bar()
    assert rep["identity_residual"] == 0
    assert rep["six"]["verdict"] == DIVERGING
    assert rep["two"]["all_zero"]
