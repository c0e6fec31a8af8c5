"""Special functions used throughout the package.

Bessel kernels and the complete elliptic integral, Taylor coefficients of the
reciprocal Gamma function, and the closed-form vertex functions
``f_{m,k}(y, C)`` that carry the logarithmic structure of the moment
expansions.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sps

from ._taylor import Jet

EULER_GAMMA = 0.57721566490153286060651209008240243
LN2 = math.log(2.0)

# Walk-class constants entering the vertex functions.
C_CLOSED = 4.0 * LN2 / math.pi - 1.0
C_UNRESTRICTED = 3.0 * LN2 / math.pi - 1.0


@lru_cache(maxsize=None)
def zeta(k: int) -> float:
    """Riemann zeta at an integer k >= 2."""
    if k < 2:
        raise ValueError("zeta(k) needs k >= 2")
    return float(sps.zeta(k, 1))


ZETA2 = math.pi**2 / 6.0
ZETA3 = 1.2020569031595942853997381615114


class NumericError(ArithmeticError):
    """Raised when a formula hits a pole or loses its accuracy guarantee."""


# --------------------------------------------------------------------------
# Bessel functions and elliptic integral
# --------------------------------------------------------------------------


def bessel_K(n: int, x: float) -> float:
    """Modified Bessel function of the second kind K_n(x) for real x > 0."""
    if n < 0 or int(n) != n:
        raise ValueError("order must be a nonnegative integer")
    if not x > 0:
        raise ValueError("K_n needs x > 0")
    return float(sps.kn(int(n), x))


def bessel_I(n: int, x: complex) -> complex:
    """Modified Bessel function of the first kind I_n(x), complex argument."""
    if int(n) != n:
        raise ValueError("order must be an integer")
    return complex(sps.iv(int(n), complex(x)))


def elliptic_K(m: complex) -> complex:
    """Complete elliptic integral of the first kind in parameter form.

    ``K(m) = int_0^{pi/2} (1 - m sin^2 t)^{-1/2} dt``, evaluated through the
    arithmetic-geometric mean ``pi / (2 AGM(1, sqrt(1 - m)))`` with principal
    square roots, valid for complex ``|m| < 1``.
    """
    m = complex(m)
    if abs(m) >= 1.0:
        raise ValueError("elliptic_K needs |m| < 1")
    a, b = 1.0 + 0j, cmath.sqrt(1.0 - m)
    for _ in range(64):
        a, b = 0.5 * (a + b), cmath.sqrt(a * b)
        # keep the right branch of the geometric mean
        if abs(a - b) > abs(a + b):
            b = -b
        if abs(a - b) <= 1e-16 * abs(a):
            break
    return math.pi / (2.0 * a)


# --------------------------------------------------------------------------
# Reciprocal Gamma coefficients
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RecipGammaCoeffs:
    """Taylor coefficients of ``1/Gamma(m + tau)`` around ``tau = 0``."""

    m: int
    coeffs: tuple[float, ...]

    def __getitem__(self, i: int) -> float:
        return self.coeffs[i]

    def __len__(self) -> int:
        return len(self.coeffs)


@lru_cache(maxsize=None)
def _recip_gamma_one(M: int) -> tuple[float, ...]:
    # log(1/Gamma(1+tau)) = gamma*tau + sum_{k>=2} (-1)^{k+1} zeta(k)/k tau^k
    log_c = np.zeros(M + 1)
    if M >= 1:
        log_c[1] = EULER_GAMMA
    for k in range(2, M + 1):
        log_c[k] = (-1) ** (k + 1) * zeta(k) / k
    # series exponential: b' = a' b
    b = np.zeros(M + 1)
    b[0] = 1.0
    for n in range(1, M + 1):
        s = 0.0
        for k in range(1, n + 1):
            s += k * log_c[k] * b[n - k]
        b[n] = s / n
    return tuple(b)


def recip_gamma_coeffs(m: int, M: int) -> RecipGammaCoeffs:
    """Coefficients ``gamma^{(m)}_0 .. gamma^{(m)}_M`` of ``1/Gamma(m + tau)``.

    Built from the log-Gamma series of ``1/Gamma(1 + tau)`` and then divided
    by ``(1 + tau)(2 + tau)...(m - 1 + tau)``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if M < 0 or M > 40:
        raise ValueError("M must lie in 0..40")
    c = list(_recip_gamma_one(M))
    for j in range(1, m):
        # multiply by 1/(j + tau) = (1/j) sum (-tau/j)^l
        out = [0.0] * (M + 1)
        for i in range(M + 1):
            prev = out[i - 1] if i else 0.0
            out[i] = (c[i] - prev) / j
        c = out
    return RecipGammaCoeffs(m, tuple(float(v) for v in c))


# --------------------------------------------------------------------------
# Vertex functions
# --------------------------------------------------------------------------


def vertex_G(m: int, k: int, y, C: float):
    """The correction factor ``G_{m,k}(y, C)``; works on floats and jets."""
    piy = math.pi * y
    total = 1.0
    inv = 1.0 / (1.0 - C * piy)
    for j in range(1, m):
        w = math.comb(k - 1, j) * math.comb(m, j + 1)
        if w:
            total = total + (w / m) * piy**j * inv**j
    return total


def vertex_f(m: int, k: int, y, C: float):
    """Vertex function ``f_{m,k}(y, C)`` of a degree-m vertex, multiplicity k.

    ``m! (pi y)^(m+1) (1 - C pi y)^(k-1) / (1 - (C+1) pi y)^(k+m) * G_{m,k}``.
    Accepts a float or a :class:`Jet` for ``y``.
    """
    if m < 1 or k < 1:
        raise ValueError("m and k must be >= 1")
    piy = math.pi * y
    den = 1.0 - (C + 1.0) * piy
    num2 = 1.0 - C * piy
    if not isinstance(y, Jet):
        if abs(den) < 1e-12 or abs(num2) < 1e-12:
            raise NumericError(f"vertex_f pole at y={y}")
    return math.factorial(m) * piy ** (m + 1) * num2 ** (k - 1) / den ** (k + m) * vertex_G(m, k, y, C)
