import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwrange.lattice_green import (
    PointConfig,
    PowerSeries,
    PrecisionError,
    delta_r,
    first_hit_matrix,
    first_hit_series,
    first_moment_gf,
    green_series,
    h_eval,
    multiplicity_fixed_gf,
    pair_once_gf,
    walk_count_series,
)
from rwrange.walk_oracle import enumerate_closed

from oracles import walk_count_formula


def test_walk_counts_small():
    s = walk_count_series((1, 0), 2, 5)
    assert s[1] == 1 and s[3] == 9
    s0 = walk_count_series(0, 2, 4)
    assert (s0[0], s0[2], s0[4]) == (1, 4, 36)


@pytest.mark.parametrize("x", [(0, 0), (1, 0), (2, 1), (-3, 2), (0, 4)])
def test_walk_counts_match_formula(x):
    s = walk_count_series(x, 2, 20)
    for m in range(21):
        assert s[m] == walk_count_formula(x[0], x[1], m)
        assert s[m] <= 4**m


def test_three_dimensional_counts():
    s = walk_count_series((0, 0, 0), 3, 6)
    # returns in Z^3: 1, 6, 90, 1860
    assert [s[m] for m in (0, 2, 4, 6)] == [1, 6, 90, 1860]


def test_green_series_origin_is_binomial_square():
    h = green_series(0, 2, 20)
    assert h[0] == 0
    for n in range(1, 11):
        assert h[2 * n] == math.comb(2 * n, n) ** 2


def test_h_eval_series_vs_elliptic():
    a = h_eval(0, 2, 0.2).value
    b = h_eval(0, 2, 0.2, method="elliptic").value
    assert abs(a - b) < 1e-10


def test_h_eval_at_zero():
    assert h_eval(0, 2, 0.0).value == 0
    assert h_eval((1, 2), 2, 0.0).value == 0
    assert h_eval((1, 0, 0), 3, 0.0).value == 0


def test_h_eval_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = 0.24 * math.sqrt(rng.random()) * cmath.exp(2j * math.pi * rng.random())
        assert abs(h_eval((3, 1), 2, z).value - h_eval((-3, -1), 2, z).value) < 1e-12


def test_h_eval_matches_exact_series():
    z = 0.11 + 0.05j
    h = green_series((2, 1), 2, 40)
    assert abs(h(z) - h_eval((2, 1), 2, z).value) < 1e-12


def test_h_eval_error_bound_and_refusal():
    v = h_eval(0, 2, 0.2, tol=1e-8)
    assert v.error <= 1e-8
    with pytest.raises(PrecisionError):
        h_eval(0, 2, 0.2499999)
    with pytest.raises(PrecisionError):
        h_eval(0, 2, 0.3)


def test_point_config_validation():
    with pytest.raises(ValueError):
        PointConfig(((1, 0), (0, 0)))
    with pytest.raises(ValueError):
        PointConfig(((0, 0), (1, 0), (1, 0)))
    assert PointConfig(((0, 0), (2, 1))).r == 2


def test_first_hit_matrix_basics():
    Y = [(0, 0), (1, 0), (0, 2)]
    assert np.all(first_hit_matrix(Y, 0.0) == 0)
    z = 0.17
    U = first_hit_matrix(Y, z)
    h0 = h_eval(0, 2, z).value
    assert np.allclose(np.diag(U), h0 / (1 + h0))
    assert delta_r([(0, 0)], z) == 1
    assert delta_r(Y, 0.0) == 1


def test_delta_two_closed_form():
    rng = np.random.default_rng(4)
    for _ in range(20):
        y2 = tuple(int(v) for v in rng.integers(-3, 4, 2))
        if y2 == (0, 0):
            continue
        z = 0.23 * math.sqrt(rng.random()) * cmath.exp(2j * math.pi * rng.random())
        u = h_eval(y2, 2, z).value / (1 + h_eval(0, 2, z).value)
        assert abs(delta_r([(0, 0), y2], z) - (1 - u * u)) < 1e-12


def test_first_hit_series_counts():
    s = first_hit_series((1, 0), 12)
    assert [s[m] for m in (1, 3, 5)] == [1, 5, 44]
    assert all(c >= 0 and c.denominator == 1 for c in s.coeffs)


def _first_hit_brute(target, m):
    # walks of length m from 0 that reach target for the first time at step m
    count = 0

    def go(pos, left):
        nonlocal count
        if left == 0:
            count += pos == target
            return
        if pos == target:
            return
        if abs(pos[0] - target[0]) + abs(pos[1] - target[1]) > left:
            return
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            go((pos[0] + dx, pos[1] + dy), left - 1)

    go((0, 0), m)
    return count


def test_first_hit_series_against_brute_force():
    s = first_hit_series((1, 0), 11)
    for m in range(12):
        assert s[m] == _first_hit_brute((1, 0), m)


def test_first_moment_gf_known_coefficients():
    assert first_moment_gf(1, 4)[2] == 8
    assert first_moment_gf(1, 4)[4] == 80
    assert first_moment_gf(2, 4)[4] == 32


def test_multiplicity_fixed_gf_small():
    s = multiplicity_fixed_gf((1, 0), 1, 6)
    assert s[0] == 0 and s[1] == 0 and s[2] == 1
    with pytest.raises(ValueError):
        multiplicity_fixed_gf((0, 0), 1, 4)


def test_pair_once_identity_against_enumeration():
    s = pair_once_gf(10)
    for L in range(2, 11, 2):
        e = enumerate_closed(L, (1,), products=[(1, 1)])
        assert s[L] == e.products[(1, 1)] - e.sums[1]


def test_power_series_arithmetic():
    a = PowerSeries([1, 2, 3], 5)
    b = a.inverse()
    assert (a * b).coeffs == (1, 0, 0, 0, 0)
    assert (a ** 2)[2] == 2 * 3 + 2 * 2
    assert a.z_ddz()[2] == 6
    assert a.to_csv_rows()[1] == (1, 2, 1)
    assert isinstance(b[1], Fraction)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=6), st.lists(st.integers(-5, 5), min_size=1, max_size=6))
def test_power_series_ring_laws(p, q):
    a = PowerSeries([1] + p, 8)
    b = PowerSeries([2] + q, 8)
    assert (a * b) / b == a
    assert (a + b) - b == a
    assert (a * b).z_ddz() == a.z_ddz() * b + a * b.z_ddz()
