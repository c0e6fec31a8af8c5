"""Truncated floating-point Taylor series (jets) in one variable.

A ``Jet`` stores the first ``order`` Taylor coefficients of a function around
some base point.  Arithmetic follows the usual truncated power series rules,
so composing rational expressions of jets yields exact derivatives up to the
truncation order (up to rounding).
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("c",)

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=float)
        if order is not None:
            out = np.zeros(order)
            n = min(order, c.size)
            out[:n] = c[:n]
            c = out
        self.c = c

    @classmethod
    def variable(cls, base: float, order: int) -> "Jet":
        c = np.zeros(order)
        c[0] = base
        if order > 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value: float, order: int) -> "Jet":
        c = np.zeros(order)
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.size

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.order)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * float(other))
        return Jet(np.convolve(self.c, other.c)[: self.order])

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a = self.c
        if a[0] == 0.0:
            raise ZeroDivisionError("jet with zero constant term is not invertible")
        n = self.order
        b = np.zeros(n)
        b[0] = 1.0 / a[0]
        for k in range(1, n):
            b[k] = -np.dot(a[1 : k + 1], b[k - 1 :: -1][:k]) / a[0]
        return Jet(b)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / float(other))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self.reciprocal()

    def __pow__(self, p: int):
        if not isinstance(p, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        if p < 0:
            return self.reciprocal() ** (-p)
        out = Jet.constant(1.0, self.order)
        base = self
        while p:
            if p & 1:
                out = out * base
            base = base * base
            p >>= 1
        return out

    def derivative(self, i: int = 1) -> float:
        """i-th derivative at the base point."""
        if i >= self.order:
            raise ValueError("derivative order exceeds jet order")
        return self.c[i] * math.factorial(i)

    def value(self) -> float:
        return float(self.c[0])

    def __repr__(self) -> str:
        return f"Jet({self.c.tolist()})"


class YSeries:
    """Power series in y around y = 0, with an integer valuation shift.

    Represents ``y**shift * sum_j c[j] y**j`` truncated at absolute degree
    ``deg_max``.  Used for exact bookkeeping of 1/ln(n) expansions where
    multiplying by negative powers of y is needed.
    """

    __slots__ = ("coeffs", "deg_max")

    def __init__(self, coeffs: dict[int, float], deg_max: int):
        self.coeffs = {k: v for k, v in coeffs.items() if k <= deg_max and v != 0.0}
        self.deg_max = deg_max

    @classmethod
    def from_jet(cls, jet: Jet, deg_max: int) -> "YSeries":
        return cls({i: float(v) for i, v in enumerate(jet.c)}, deg_max)

    def __add__(self, other: "YSeries") -> "YSeries":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return YSeries(out, min(self.deg_max, other.deg_max))

    def __sub__(self, other: "YSeries") -> "YSeries":
        return self + other.scale(-1.0)

    def scale(self, a: float) -> "YSeries":
        return YSeries({k: a * v for k, v in self.coeffs.items()}, self.deg_max)

    def __mul__(self, other: "YSeries") -> "YSeries":
        lo_a = min(self.coeffs, default=0)
        lo_b = min(other.coeffs, default=0)
        deg = min(self.deg_max + lo_b, other.deg_max + lo_a)
        out: dict[int, float] = {}
        for i, a in self.coeffs.items():
            for j, b in other.coeffs.items():
                if i + j <= deg:
                    out[i + j] = out.get(i + j, 0.0) + a * b
        return YSeries(out, deg)

    def shift(self, s: int) -> "YSeries":
        return YSeries({k + s: v for k, v in self.coeffs.items()}, self.deg_max + s)

    def diff(self) -> "YSeries":
        return YSeries({k - 1: k * v for k, v in self.coeffs.items() if k != 0}, self.deg_max - 1)

    def coeff(self, k: int) -> float:
        if k > self.deg_max:
            raise ValueError(f"coefficient {k} beyond truncation degree {self.deg_max}")
        return self.coeffs.get(k, 0.0)

    def __call__(self, y: float) -> float:
        return sum(v * y**k for k, v in self.coeffs.items())
