import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reachquant.numerics import mat_exp
from reachquant.quantizer import DecodedPacket, QuantizerState, abs_matrix
from reachquant.schemes import (
    SchemeKind,
    compare_schemes,
    feasibility_norm,
    feasibility_set,
    min_feasible_N,
    norm_based_update,
    norm_range_fixed_point,
    set_based_region_via_zonotopes,
    set_based_update,
    set_eqbar_fixed_point,
)

from conftest import A_ROT, rotation_scaling

LAM = rotation_scaling(0.1)
LAM_BAR = np.abs(LAM)
BUE0 = 4.087522203943684


def _pd(v):
    return DecodedPacket(np.asarray(v, float), 0)


def test_scheme_parse():
    assert SchemeKind.parse("Set-Based") is SchemeKind.SET_BASED
    assert SchemeKind.parse("norm") is SchemeKind.NORM_BASED
    with pytest.raises(ValueError):
        SchemeKind.parse("box")


def test_set_update_trivial():
    qs = QuantizerState(np.zeros(2), np.array([1.0, 2.0]))
    nxt = set_based_update(qs, _pd([0.3, 0.1]), np.eye(2), np.eye(2), 0.0, 4)
    assert np.allclose(nxt.C, [0.3, 0.1]) and np.allclose(nxt.L, [0.25, 0.5]) and nxt.k == 1


def test_set_update_first_step():
    qs = QuantizerState(np.array([10.0, -5.0]), np.ones(2))
    nxt = set_based_update(qs, _pd([10.0, -5.0]), LAM, LAM_BAR, BUE0, 4)
    assert np.allclose(nxt.C, LAM @ [10, -5])
    assert np.allclose(nxt.C, [10.09590595, -0.64344938], atol=1e-8)
    assert np.allclose(nxt.L, LAM_BAR @ [0.25, 0.25] + BUE0)
    assert np.allclose(nxt.L, [4.38396489, 4.38396489], atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 3), st.floats(0.01, 3),
       st.floats(0, 2), st.integers(2, 16))
def test_set_update_matches_zonotope_hull(p1, p2, l1, l2, bue, N):
    qs = QuantizerState(np.zeros(2), np.array([l1, l2]))
    closed = set_based_update(qs, _pd([p1, p2]), LAM, LAM_BAR, bue, N)
    hull = set_based_region_via_zonotopes(qs, _pd([p1, p2]), LAM, bue, N)
    assert np.allclose(hull.center, closed.C, atol=1e-12)
    assert np.allclose(hull.half_widths, closed.L, atol=1e-12)


def test_norm_update():
    qs = QuantizerState(np.zeros(2), np.full(2, 2.0))
    nxt = norm_based_update(qs, _pd([1.0, 1.0]), np.eye(2), 0.0, 0.1, 0.0, 4)
    assert np.allclose(nxt.L, 0.5)
    qs = QuantizerState(np.array([10.0, -5.0]), np.ones(2))
    nxt = norm_based_update(qs, _pd([10.0, -5.0]), LAM, 5.0, 0.1, BUE0, 4)
    assert nxt.L[0] == pytest.approx(math.exp(0.5) / 4 + BUE0, rel=1e-14)
    assert nxt.L[0] == pytest.approx(4.499702521618716, rel=1e-12)
    with pytest.raises(ValueError):
        norm_based_update(QuantizerState(np.zeros(2), np.array([1.0, 2.0])),
                          _pd([0, 0]), LAM, 5.0, 0.1, 0.0, 4)


def test_norm_fixed_point():
    bue = 0.4087550460263365
    L = 1.0
    for _ in range(300):
        L = math.exp(0.5) / 4 * L + bue
    assert norm_range_fixed_point(5.0, 0.1, bue, 4) == pytest.approx(L, rel=1e-12)
    assert L == pytest.approx(0.6953748884515267, rel=1e-12)
    with pytest.raises(ValueError):
        norm_range_fixed_point(5.0, 1.0, bue, 4)


def test_example_feasibility():
    s, n = compare_schemes(A_ROT, 0.1, 4)
    a, b = LAM_BAR[0, 0], LAM_BAR[0, 1]   # symmetric 2x2 oracle: rho = a + b
    assert s.lhs == pytest.approx((a + b) / 4, abs=1e-9)
    assert s.lhs == pytest.approx(0.29646, abs=1e-4)
    assert n.lhs == pytest.approx(math.exp(0.5) / 4, abs=1e-15)
    assert s.feasible and n.feasible and s.lhs <= n.lhs


def test_zero_dynamics():
    for N in (2, 3, 8):
        s, n = compare_schemes(np.zeros((2, 2)), 0.5, N)
        assert s.lhs == pytest.approx(1 / N, abs=1e-9) and n.lhs == pytest.approx(1 / N)


def test_norm_boundary_is_infeasible():
    T = math.log(4) / 5
    rep = feasibility_norm(A_ROT, T, 4)
    assert rep.lhs == pytest.approx(1.0, abs=1e-12) and not rep.feasible


def test_large_N_always_feasible():
    assert feasibility_set(A_ROT, 3.0, 10**6).feasible
    assert feasibility_norm(A_ROT, 3.0, 10**7).feasible


def _brute_min_N(A, T, check):
    N = 2
    while not check(A, T, N).feasible:
        N += 1
    return N


@pytest.mark.parametrize("T", [0.05, 0.1, 0.3, 0.6, 1.0])
def test_min_feasible_N_matches_scan(T):
    for kind, check in ((SchemeKind.SET_BASED, feasibility_set), (SchemeKind.NORM_BASED, feasibility_norm)):
        assert min_feasible_N(A_ROT, T, kind) == _brute_min_N(A_ROT, T, check)
    assert min_feasible_N(A_ROT, T, SchemeKind.SET_BASED) <= min_feasible_N(A_ROT, T, SchemeKind.NORM_BASED)


def test_practical_gap_instance():
    # unstable triangular plant: |A| = 2.2 but the spectral abscissa is 1
    A = np.array([[1.0, 1.2], [0.0, -1.0]])
    hits = []
    for T in np.arange(0.5, 2.0, 0.001):
        ns = min_feasible_N(A, T, SchemeKind.SET_BASED)
        nn = min_feasible_N(A, T, SchemeKind.NORM_BASED)
        # closed forms: rho(|e^{AT}|) = e^T (triangular), norm lhs = e^{2.2 T}
        assert ns == math.floor(math.exp(T)) + 1
        assert nn == math.floor(math.exp(2.2 * T)) + 1
        if (ns, nn) == (4, 16):
            hits.append(T)
    assert hits, "no T gives the (set 4, norm 16) split"


def test_example_plant_set_scheme_needs_two_levels():
    # rho(|e^{AT}|) = e^{-T}(|cos 4T| + |sin 4T|) <= sqrt(2) e^{-T} < 2 for every T
    for T in np.linspace(0.01, 5, 300):
        assert min_feasible_N(A_ROT, T, SchemeKind.SET_BASED) == 2


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dominance_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    A = rng.uniform(-3, 3, (n, n))
    T, N = float(rng.uniform(0.01, 1.0)), int(rng.integers(2, 64))
    s, nm = compare_schemes(A, T, N)
    assert s.lhs <= nm.lhs + 1e-8
    assert not nm.feasible or s.feasible


def test_set_fixed_point_trivial():
    assert np.allclose(set_eqbar_fixed_point(np.zeros((2, 2)), 0.8, 4), [0.2, 0.2])
    assert np.allclose(set_eqbar_fixed_point(LAM_BAR, 0.0, 4), 0)
