import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from reachquant.numerics import mat_exp
from reachquant.sets import (
    Hyperrectangle,
    Zonotope,
    contains_point,
    hypercube,
    hyperrect_to_zonotope,
    interval_hull,
    linear_map,
    minkowski_sum,
)

from conftest import A_ROT

small = st.floats(-5, 5, allow_nan=False)


def Z(c, gens=()):
    G = np.array(gens, dtype=float).T if len(gens) else np.zeros((len(c), 0))
    return Zonotope(np.array(c, dtype=float), G)


def test_minkowski_sum():
    W = Z([1.0, 2.0], [[0.5, 0.0]])
    assert minkowski_sum(Z([0, 0]), W).order == 1
    assert np.array_equal(minkowski_sum(Z([0, 0]), W).center, W.center)
    S = minkowski_sum(Z([1, 0], [[1, 0]]), Z([0, 1], [[0, 1]]))
    assert np.array_equal(S.center, [1, 1])
    assert np.array_equal(S.generators, np.eye(2))
    assert (W + W).order == 2 * W.order
    with pytest.raises(ValueError):
        minkowski_sum(Z([0]), Z([0, 0]))


def test_linear_map():
    W = Z([10, -5], [[0.25, 0], [0, 0.25]])
    assert np.array_equal(linear_map(np.eye(2), W).generators, W.generators)
    D = linear_map(2 * np.eye(2), W)
    assert np.array_equal(D.center, 2 * W.center) and np.array_equal(D.generators, 2 * W.generators)
    Lam = mat_exp(A_ROT, 0.1)
    M = linear_map(Lam, W)
    assert np.allclose(M.center, Lam @ [10, -5])
    assert np.allclose(M.generators, Lam @ (0.25 * np.eye(2)))
    assert np.allclose((Lam @ W).center, M.center)


def test_interval_hull():
    H = interval_hull(Z([0, 0], [[1, 0], [1, 1]]))
    assert np.array_equal(H.half_widths, [2, 1])
    assert np.array_equal(interval_hull(Z([3, 4])).half_widths, [0, 0])
    H = interval_hull(Z([1, 1], [[-0.5, 2.0]]))
    assert np.array_equal(H.half_widths, [0.5, 2.0])


def test_hyperrect_to_zonotope():
    Zb = hyperrect_to_zonotope(Hyperrectangle([10, -5], [1, 1]))
    assert np.array_equal(Zb.center, [10, -5]) and np.array_equal(Zb.generators, np.eye(2))
    assert hyperrect_to_zonotope(Hyperrectangle([1, 2], [0, 0])).order == 0
    assert hyperrect_to_zonotope(Hyperrectangle([1, 2], [0, 0]), drop_zero=False).order == 2


@settings(max_examples=50, deadline=None)
@given(arrays(float, 3, elements=small), arrays(float, 3, elements=st.floats(0, 5)))
def test_box_roundtrip(c, w):
    H = Hyperrectangle(c, w)
    assert interval_hull(hyperrect_to_zonotope(H)) == H


@settings(max_examples=50, deadline=None)
@given(arrays(float, (2, 4), elements=small), arrays(float, (2, 2), elements=small),
       arrays(float, 4, elements=st.floats(-1, 1)))
def test_points_of_image_lie_in_hull(G, K, eps):
    W = Zonotope(np.array([0.3, -0.7]), G)
    img = linear_map(K, W)
    assert contains_point(interval_hull(img), K @ W.point(eps), slack=1e-9)


def test_contains_point():
    H = Hyperrectangle([0, 0], [1, 1])
    assert contains_point(H, [0, 0])
    assert contains_point(H, [1, -1])
    assert not contains_point(H, [1.001, 0])
    assert [0.5, 0.5] in H
    assert hypercube([1, 1], 0.5) == Hyperrectangle([1, 1], [0.5, 0.5])


def test_invalid_shapes():
    with pytest.raises(ValueError):
        Hyperrectangle([0, 0], [1, -1])
    with pytest.raises(ValueError):
        Zonotope(np.zeros(2), np.zeros((3, 1)))
