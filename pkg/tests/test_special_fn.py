import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rwrange._taylor import Jet
from rwrange.special_fn import (
    C_CLOSED,
    C_UNRESTRICTED,
    EULER_GAMMA,
    NumericError,
    ZETA2,
    ZETA3,
    bessel_I,
    bessel_K,
    elliptic_K,
    recip_gamma_coeffs,
    vertex_f,
    zeta,
)


def test_constants():
    assert abs(EULER_GAMMA - float(mp.euler)) < 1e-16
    assert abs(ZETA2 - float(mp.zeta(2))) < 1e-16
    assert abs(ZETA3 - float(mp.zeta(3))) < 1e-15
    assert abs(zeta(5) - float(mp.zeta(5))) < 1e-15
    assert abs(C_CLOSED - (4 * math.log(2) / math.pi - 1)) < 1e-16
    assert abs(C_UNRESTRICTED - (3 * math.log(2) / math.pi - 1)) < 1e-16


@pytest.mark.parametrize("n", [0, 1, 2, 5])
@pytest.mark.parametrize("x", [1e-6, 0.3, 1.0, 7.5, 40.0])
def test_bessel_against_mpmath(n, x):
    assert bessel_K(n, x) == pytest.approx(float(mp.besselk(n, x)), rel=1e-13)
    z = complex(x, 0.4)
    assert abs(bessel_I(n, z) - complex(mp.besseli(n, z))) <= 1e-13 * abs(complex(mp.besseli(n, z))) + 1e-300


def test_bessel_domain():
    with pytest.raises(ValueError):
        bessel_K(0, 0.0)
    with pytest.raises(ValueError):
        bessel_K(-1, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 0.95), st.floats(0, 2 * math.pi))
def test_elliptic_K_against_mpmath(rad, ang):
    m = rad * complex(math.cos(ang), math.sin(ang))
    ref = complex(mp.ellipk(m))
    assert abs(elliptic_K(m) - ref) <= 1e-12 * abs(ref)


def test_elliptic_K_known_value():
    assert elliptic_K(0) == pytest.approx(math.pi / 2, abs=1e-16)
    with pytest.raises(ValueError):
        elliptic_K(1.0)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_recip_gamma_coeffs_against_mpmath(m):
    mp.mp.dps = 30
    ref = mp.taylor(lambda t: mp.rgamma(m + t), 0, 12)
    got = recip_gamma_coeffs(m, 12)
    for a, b in zip(got, ref):
        assert abs(a - float(b)) <= 1e-14 * max(1.0, abs(float(b)))


def test_recip_gamma_low_order():
    g1 = recip_gamma_coeffs(1, 2)
    assert g1[0] == 1.0 and abs(g1[1] - EULER_GAMMA) < 1e-16
    # 1/Gamma(2 + t) = 1 + (gamma - 1) t + ...
    g2 = recip_gamma_coeffs(2, 1)
    assert abs(g2[1] - (EULER_GAMMA - 1)) < 1e-15
    for r in range(1, 7):
        assert recip_gamma_coeffs(r, 0)[0] == pytest.approx(1 / math.factorial(r - 1))
    with pytest.raises(ValueError):
        recip_gamma_coeffs(0, 3)


def test_vertex_f_leading_behaviour():
    y = 1e-4
    for m in (1, 2, 3):
        for k in (1, 2, 3):
            v = vertex_f(m, k, y, C_CLOSED)
            assert v == pytest.approx(math.factorial(m) * (math.pi * y) ** (m + 1), rel=1e-2)


def test_vertex_f_jet_matches_finite_difference():
    y0 = -0.12
    J = vertex_f(2, 3, Jet.variable(y0, 3), C_UNRESTRICTED)
    h = 1e-5
    fd = (vertex_f(2, 3, y0 + h, C_UNRESTRICTED) - vertex_f(2, 3, y0 - h, C_UNRESTRICTED)) / (2 * h)
    assert J.value() == pytest.approx(vertex_f(2, 3, y0, C_UNRESTRICTED), rel=1e-14)
    assert J.derivative(1) == pytest.approx(fd, rel=1e-8)


def test_vertex_f_pole():
    pole = 1.0 / ((C_CLOSED + 1.0) * math.pi)
    with pytest.raises(NumericError):
        vertex_f(1, 1, pole, C_CLOSED)


def test_jet_arithmetic():
    x = Jet.variable(0.5, 6)
    f = (1 + x) ** -2 * x
    # d/dx x/(1+x)^2 = (1 - x)/(1 + x)^3
    assert f.derivative(1) == pytest.approx((1 - 0.5) / 1.5**3, rel=1e-14)
    g = 1.0 / (1.0 - x)
    assert g.derivative(4) == pytest.approx(24 / 0.5**5, rel=1e-12)
    np.testing.assert_allclose((x * x / x).c, x.c, atol=1e-14)
