"""Lattice Green's function of the simple random walk and first-hit objects.

``h(x, d, z) = -delta_{x,0} + sum_m W_m(x) z^m`` where ``W_m(x)`` counts
nearest-neighbour walks of length m from the origin to x.  Exact series come
from dynamic programming on a box; floating evaluation adds a geometric tail
bound.  For d = 2 and x = 0 there is also the closed form
``h(0, 2, z) = (2/pi) K(16 z^2) - 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .special_fn import elliptic_K


class PrecisionError(ArithmeticError):
    """Requested accuracy is not reachable within the truncation budget."""


# --------------------------------------------------------------------------
# Exact power series
# --------------------------------------------------------------------------


class PowerSeries:
    """Truncated power series in z with exact integer or rational coefficients."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        c = [Fraction(v) for v in coeffs]
        if order is not None:
            c = (c + [Fraction(0)] * order)[:order]
        self._c = tuple(c)

    @property
    def order(self) -> int:
        return len(self._c)

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return self._c

    def __getitem__(self, m: int) -> Fraction:
        return self._c[m]

    def __len__(self) -> int:
        return len(self._c)

    def __eq__(self, other) -> bool:
        return isinstance(other, PowerSeries) and self._c == other._c

    def __hash__(self) -> int:
        return hash(self._c)

    def __repr__(self) -> str:
        return f"PowerSeries({[str(v) for v in self._c]})"

    def _coerce(self, other) -> "PowerSeries":
        if isinstance(other, PowerSeries):
            return other
        return PowerSeries([other], self.order)

    def __add__(self, other):
        o = self._coerce(other)
        n = min(self.order, o.order)
        return PowerSeries([a + b for a, b in zip(self._c[:n], o._c[:n])])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries([-a for a in self._c])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            f = Fraction(other)
            return PowerSeries([a * f for a in self._c])
        n = min(self.order, other.order)
        a, b = self._c, other._c
        out = []
        for m in range(n):
            s = Fraction(0)
            for i in range(m + 1):
                if a[i] and b[m - i]:
                    s += a[i] * b[m - i]
            out.append(s)
        return PowerSeries(out)

    __rmul__ = __mul__

    def inverse(self) -> "PowerSeries":
        """Multiplicative inverse; the constant term must be nonzero."""
        a = self._c
        if a[0] == 0:
            raise ZeroDivisionError("series with zero constant term is not a unit")
        b = [Fraction(1) / a[0]]
        for m in range(1, self.order):
            s = sum((a[i] * b[m - i] for i in range(1, m + 1) if a[i]), Fraction(0))
            b.append(-s / a[0])
        return PowerSeries(b)

    def __truediv__(self, other):
        if not isinstance(other, PowerSeries):
            return self * (Fraction(1) / Fraction(other))
        return self * other.inverse()

    def __pow__(self, k: int) -> "PowerSeries":
        if k < 0:
            return self.inverse() ** (-k)
        out = PowerSeries([1], self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def z_ddz(self) -> "PowerSeries":
        """Apply z d/dz."""
        return PowerSeries([m * a for m, a in enumerate(self._c)])

    def truncate(self, order: int) -> "PowerSeries":
        return PowerSeries(self._c[:order])

    def to_csv_rows(self) -> list[tuple[int, int, int]]:
        return [(m, a.numerator, a.denominator) for m, a in enumerate(self._c)]

    def __call__(self, z: complex) -> complex:
        s = 0j
        for a in reversed(self._c):
            s = s * z + float(a)
        return s


# --------------------------------------------------------------------------
# Lattice points
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PointConfig:
    """Distinct lattice points, the first one at the origin."""

    points: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        pts = tuple(tuple(int(c) for c in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValueError("need at least one point")
        if any(c != 0 for c in pts[0]):
            raise ValueError("first point must be the origin")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be pairwise distinct")
        if len({len(p) for p in pts}) != 1:
            raise ValueError("points must share a dimension")

    @property
    def r(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return len(self.points[0])


def _as_point(x, d: int) -> tuple[int, ...]:
    if isinstance(x, int) and x == 0:
        return (0,) * d
    p = tuple(int(c) for c in x)
    if len(p) != d:
        raise ValueError(f"point {x} does not have dimension {d}")
    return p


# --------------------------------------------------------------------------
# Exact walk counts by dynamic programming
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _walk_counts(p: tuple[int, ...], N: int) -> tuple[int, ...]:
    """Exact walk counts from 0 to p for lengths 0..N.

    Dynamic programming on the box of radius ``(N + |p|_1) // 2 + 1``: an
    intermediate point of a walk of length at most N that ends at p never
    leaves that box, so the counts at p are exact.
    """
    d = len(p)
    l1 = sum(abs(c) for c in p)
    if l1 > N:
        return (0,) * (N + 1)
    R = (N + l1) // 2 + 1
    shape = (2 * R + 1,) * d
    dtype = np.int64 if (2 * d) ** N < 2**62 else object
    g = np.zeros(shape, dtype=dtype)
    g[(R,) * d] = 1
    idx = tuple(c + R for c in p)
    out = [int(g[idx])]
    for _ in range(N):
        nxt = np.zeros(shape, dtype=dtype)
        for ax in range(d):
            lo = [slice(None)] * d
            hi = [slice(None)] * d
            lo[ax] = slice(0, 2 * R)
            hi[ax] = slice(1, 2 * R + 1)
            nxt[tuple(hi)] += g[tuple(lo)]
            nxt[tuple(lo)] += g[tuple(hi)]
        g = nxt
        out.append(int(g[idx]))
    return tuple(out)


def walk_count_series(x, d: int, N: int) -> PowerSeries:
    """Exact series ``sum_m W_m(x) z^m`` for m = 0..N (length N+1)."""
    if d not in (2, 3):
        raise ValueError("d must be 2 or 3")
    if N < 0 or N > 60:
        raise ValueError("order N must lie in 0..60")
    return PowerSeries(_walk_counts(_as_point(x, d), N))


def green_series(x, d: int, N: int) -> PowerSeries:
    """Exact series of ``h(x, d, z)`` (walk counts minus ``delta_{x,0}``)."""
    s = walk_count_series(x, d, N)
    if all(c == 0 for c in _as_point(x, d)):
        s = s - 1
    return s


# --------------------------------------------------------------------------
# Floating evaluation
# --------------------------------------------------------------------------


class GreenValue(NamedTuple):
    value: complex
    error: float


@lru_cache(maxsize=4)
def _walk_probs_2d_factors(N: int) -> np.ndarray:
    """p[m, s] = P(one-dimensional +-1 walk of length m sits at s - N)."""
    width = 2 * N + 1
    out = np.zeros((N + 1, width))
    row = np.zeros(width)
    row[N] = 1.0
    out[0] = row
    for m in range(1, N + 1):
        nxt = np.zeros(width)
        nxt[1:] += 0.5 * row[:-1]
        nxt[:-1] += 0.5 * row[1:]
        row = nxt
        out[m] = row
    return out


def _prob_coeffs(p: tuple[int, ...], d: int, N: int) -> np.ndarray:
    """Probabilities ``W_m(x) / (2d)^m`` for m = 0..N as floats."""
    if d == 2:
        # rotated coordinates u = x + y, v = x - y are independent +-1 walks
        tab = _walk_probs_2d_factors(N)
        u, v = p[0] + p[1], p[0] - p[1]
        if abs(u) > N or abs(v) > N:
            return np.zeros(N + 1)
        return tab[:, u + N] * tab[:, v + N]
    if N > 60:
        raise PrecisionError("d = 3 evaluation is limited to order 60")
    return np.array([c / 6.0**m for m, c in enumerate(_walk_counts(p, N))])


def _order_for(q: float, tol: float) -> int:
    # smallest N with sum_{m>N} q^m = q^(N+1)/(1-q) <= tol
    if q == 0.0:
        return 0
    return max(0, math.ceil(math.log(tol * (1.0 - q)) / math.log(q)) - 1)


def h_eval(x, d: int, z, tol: float = 1e-13, max_order: int = 6000,
           method: str = "series") -> GreenValue:
    """Evaluate ``h(x, d, z)`` with an error bound.

    ``method="series"`` sums the walk-count series up to the order where the
    geometric tail ``sum_{m>N} (2d|z|)^m`` falls below ``tol``; a
    :class:`PrecisionError` is raised when that needs more than ``max_order``
    terms.  ``method="elliptic"`` (d = 2, x = 0 only) uses the complete
    elliptic integral.
    """
    p = _as_point(x, d)
    zs = np.asarray(z, dtype=complex)
    if method == "elliptic":
        if d != 2 or any(p):
            raise ValueError("the elliptic form is only available for x = 0, d = 2")
        val = np.vectorize(lambda w: 2.0 / math.pi * elliptic_K(16.0 * w * w) - 1.0,
                           otypes=[complex])(zs)
        return GreenValue(val if val.ndim else complex(val), 1e-14)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    q = 2 * d * float(np.max(np.abs(zs))) if zs.size else 0.0
    if q >= 1.0:
        raise PrecisionError(f"|z| = {q / (2 * d)} is outside the disk of convergence")
    N = _order_for(q, tol)
    if N > max_order:
        raise PrecisionError(f"|z| too close to 1/(2d): order {N} > budget {max_order}")
    if d == 3 and N > 60:
        raise PrecisionError("d = 3 evaluation is limited to order 60")
    N = max(N, 1)
    probs = _prob_coeffs(p, d, N)
    w = 2 * d * zs
    val = np.polynomial.polynomial.polyval(w, probs)
    if not any(p):
        val = val - 1.0
    err = q ** (N + 1) / (1.0 - q) if q else 0.0
    return GreenValue(val if np.ndim(val) else complex(val), err)


def _h(x, d: int, z, tol: float) -> complex | np.ndarray:
    return h_eval(x, d, z, tol=tol).value


def first_hit_matrix(Y: PointConfig | Sequence, z, tol: float = 1e-13) -> np.ndarray:
    """``U[i, j] = h(Y_i - Y_j, d, z) / (1 + h(0, d, z))``."""
    if not isinstance(Y, PointConfig):
        Y = PointConfig(tuple(Y))
    d = Y.d
    h0 = _h((0,) * d, d, z, tol)
    U = np.empty((Y.r, Y.r), dtype=complex)
    cache: dict[tuple[int, ...], complex] = {}
    for i, a in enumerate(Y.points):
        for j, b in enumerate(Y.points):
            diff = tuple(ai - bi for ai, bi in zip(a, b))
            key = max(diff, tuple(-c for c in diff))  # h(x) = h(-x)
            if key not in cache:
                cache[key] = _h(key, d, z, tol)
            U[i, j] = cache[key] / (1.0 + h0)
    return U


def delta_r(Y: PointConfig | Sequence, z, tol: float = 1e-13) -> complex:
    """First-hit determinant ``det(1 + U)`` with the diagonal of U removed.

    The diagonal of U carries returns to the same point, which the
    determinant excludes; with it removed ``Delta_1 = 1`` and
    ``Delta_2 = 1 - U_12 U_21``.
    """
    U = first_hit_matrix(Y, z, tol)
    np.fill_diagonal(U, 0.0)
    return complex(np.linalg.det(np.eye(U.shape[0]) + U))


# --------------------------------------------------------------------------
# Generating functions for multiplicities
# --------------------------------------------------------------------------


def _return_ratio(N: int) -> PowerSeries:
    h0 = green_series(0, 2, N)
    return h0 / (h0 + 1)


def first_moment_gf(k: int, N: int) -> PowerSeries:
    """Series of ``z d/dz (1/k) (h0 / (1 + h0))^k`` up to z^N (d = 2).

    Coefficient ``2n`` is the sum over closed walks of length 2n of the
    number of points visited exactly k times.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if N > 40:
        raise ValueError("order N must be <= 40")
    return (_return_ratio(N) ** k).z_ddz() * Fraction(1, k)


def multiplicity_fixed_gf(y, k: int, N: int) -> PowerSeries:
    """Series of ``h(y)^2 / (1 + h0)^2 * (h0 / (1 + h0))^(k-1)`` (d = 2).

    Coefficient of ``z^L`` counts closed walks of length L that visit the
    point ``-y`` exactly k times.
    """
    p = _as_point(y, 2)
    if not any(p):
        raise ValueError("y must be nonzero")
    if k < 1:
        raise ValueError("k must be >= 1")
    hy = green_series(p, 2, N)
    h0 = green_series(0, 2, N)
    one_h0 = h0 + 1
    return (hy / one_h0) ** 2 * (h0 / one_h0) ** (k - 1)


def first_hit_series(x, N: int) -> PowerSeries:
    """Series of ``h(x) / (1 + h(0))`` (d = 2): first-passage walk counts."""
    p = _as_point(x, 2)
    return green_series(p, 2, N) / (green_series(0, 2, N) + 1)


def pair_once_gf(N: int) -> PowerSeries:
    """Series of ``z d/dz sum_{x != 0} phi / ((1 - phi)^2 (1 + h0)^2)`` (d = 2).

    Here ``phi = (h(x) / (1 + h0))^2``.  Coefficient L equals the sum over
    closed walks of length L of ``N_2 (N_2 - 1)``, the number of ordered
    pairs of distinct points each visited exactly once.  The spatial sum is
    cut at ``|x|_1 <= N/2``; farther points cannot be reached and returned
    from within N steps, so the truncation is exact.
    """
    if N < 0 or N > 16:
        raise ValueError("order N must lie in 0..16")
    h0 = green_series(0, 2, N)
    one_h0 = h0 + 1
    inv = (one_h0 * one_h0).inverse()
    total = PowerSeries([0] * (N + 1))
    R = N // 2
    for a in range(-R, R + 1):
        for b in range(-(R - abs(a)), R - abs(a) + 1):
            if a == 0 and b == 0:
                continue
            u = green_series((a, b), 2, N) / one_h0
            phi = u * u
            total = total + phi * ((1 - phi) * (1 - phi)).inverse() * inv
    return total.z_ddz()
