from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sandstab.lattice import (
    GreenMatrix,
    Volume,
    apply_toppling_matrix,
    discrete_laplacian,
    green_function,
    green_row,
    lacking_array,
    lacking_neighbors,
    martingale_mean,
    neighbor_table,
    neighbors,
    rw_visits_estimate,
    toppling_matrix,
)
from sandstab.linalg import ExactSizeError

from oracles import dense_toppling_matrix, gauss_jordan_inverse

# frozen from gauss_jordan_inverse on the explicit 4x4 matrix
G_2x2 = {"diag": Fraction(7, 24), "adjacent": Fraction(1, 12), "opposite": Fraction(1, 24)}


def test_neighbors_examples():
    assert set(neighbors((0, 0))) == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert set(neighbors((5,))) == {(4,), (6,)}
    nb = neighbors((1, 2, 3))
    assert len(nb) == 6 and all(sum(abs(a - b) for a, b in zip(y, (1, 2, 3))) == 1 for y in nb)


def test_lacking_neighbors():
    V = Volume((0, 0), (4, 3))
    assert lacking_neighbors((0, 0), V) == 2
    assert lacking_neighbors((2, 2), V) == 0
    assert lacking_neighbors((2, 0), V) == 1
    with pytest.raises(ValueError):
        lacking_neighbors((9, 9), V)


def test_volume_box_and_nesting():
    V = Volume.box(5, 2)
    assert V.lo == (-2, -2) and V.hi == (2, 2) and V.size == 25
    W = Volume.box(4, 2)
    assert W.lo == (-2, -2) and W.hi == (1, 1)
    assert V.contains_volume(W) and not W.contains_volume(V)
    assert V.index(V.site(17)) == 17
    with pytest.raises(ValueError):
        Volume((0, 0), (-1, 3))


@given(st.lists(st.integers(1, 6), min_size=1, max_size=3))
def test_toppling_matrix_row_sums_and_symmetry(shape):
    V = Volume((0,) * len(shape), tuple(s - 1 for s in shape))
    D = toppling_matrix(V)
    assert (abs(D - D.T)).sum() == 0
    np.testing.assert_array_equal(np.asarray(D.sum(axis=1)).ravel(), lacking_array(V).ravel())
    ones = np.ones(V.shape, dtype=np.int64)
    np.testing.assert_array_equal(apply_toppling_matrix(V, ones), lacking_array(V))


def test_neighbor_table_matches_oracle_matrix():
    V = Volume((0, 0), (2, 3))
    D = np.array(dense_toppling_matrix(V.shape))
    np.testing.assert_array_equal(toppling_matrix(V).toarray(), D)
    assert not neighbor_table(V).flags.writeable


def test_green_single_site():
    assert green_function(Volume((0, 0), (0, 0)))[(0, 0), (0, 0)] == Fraction(1, 4)
    assert green_function(Volume((0,), (0,)))[(0,), (0,)] == Fraction(1, 2)


def test_green_2x2_exact():
    V = Volume((0, 0), (1, 1))
    G = green_function(V)
    ref = gauss_jordan_inverse(dense_toppling_matrix(V.shape))
    assert [list(r) for r in G.entries] == ref
    assert G[(0, 0), (0, 0)] == G_2x2["diag"]
    assert G[(0, 0), (0, 1)] == G_2x2["adjacent"]
    assert G[(0, 0), (1, 1)] == G_2x2["opposite"]
    assert G.residual() == 0


def test_green_3x4_against_oracle_and_properties():
    V = Volume((0, 0), (2, 3))
    G = green_function(V)
    ref = gauss_jordan_inverse(dense_toppling_matrix(V.shape))
    assert [list(r) for r in G.entries] == ref
    n = V.size
    for i in range(n):
        for j in range(n):
            assert G.entries[i][j] == G.entries[j][i] >= 0


def test_green_float_close_to_exact():
    V = Volume.box(5, 2)
    Ge, Gf = green_function(V), green_function(V, "float")
    exact = np.array([[float(v) for v in row] for row in Ge.entries])
    np.testing.assert_allclose(Gf.entries, exact, atol=1e-12)
    assert Gf.residual() < 1e-12


def test_green_json_roundtrip():
    G = green_function(Volume((0, 0), (1, 2)))
    G2 = GreenMatrix.from_json(G.to_json())
    assert G2.entries == G.entries and G2.volume == G.volume


def test_green_caps():
    with pytest.raises(ExactSizeError):
        green_function(Volume.box(40, 2))
    with pytest.raises(ValueError):
        green_function(Volume.box(2, 2), mode="bogus")


def test_green_row_matches_inverse():
    V = Volume.box(6, 2)
    G = green_function(V)
    row = green_row(V, (0, 0))
    assert row == list(G.entries[V.index((0, 0))])


def test_rw_visits_estimate_within_4_sigma():
    V = Volume.box(5, 2)
    exact = float(green_function(V)[(0, 0), (1, 0)])
    est, err = rw_visits_estimate(V, (0, 0), (1, 0), 20_000, seed=3)
    assert abs(est - exact) < 4 * err


def test_discrete_laplacian_of_quadratic():
    def f(x):
        return x[0] ** 2 + x[1] ** 2

    for x in [(0, 0), (3, -7), (100, 5)]:
        assert discrete_laplacian(f, x) == -4


@pytest.mark.parametrize(
    "f",
    [lambda x: x[0] ** 2 + x[1] ** 2, lambda x: x[0] * x[1] + 3 * x[0], lambda x: float(np.cos(0.3 * x[0]) * x[1])],
)
def test_martingale_mean_zero(f):
    V = Volume.box(15, 2)
    mean, err = martingale_mean(f, V, n_walks=5000, horizon=200, seed=9)
    assert abs(mean) < 4 * err + 1e-12
