"""Asymptotic moments of the multiple-point range and characteristic functions.

Expansions are organised in powers of ``y = -1/ln(n)``.  A quantity of the
form ``n^(m-1) sum_i gamma^{(m)}_i y^(i+1) (d/dy)^i (y^(i-1) g(y))`` is the
asymptotic Taylor coefficient of ``g(1/ln(1 - w)) / (1 - w)^m``; every moment
formula below is a weighted sum of such terms with ``g`` built from the
vertex functions.

Derivatives in y are taken exactly on truncated Taylor jets: around ``y = 0``
to read off the ``1/ln(n)^j`` coefficients and around ``y = -1/ln(n)`` to
evaluate at finite n.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import special as sps

from ._taylor import Jet, YSeries
from .feynman import GraphSumRecord, MissingCacheError, integrals
from .graph_enum import BalancedMatrix, cofactor, degree_vectors, enumerate_balanced, matrix_key, mult_weight
from .special_fn import (
    C_CLOSED,
    C_UNRESTRICTED,
    EULER_GAMMA,
    ZETA2,
    ZETA3,
    recip_gamma_coeffs,
    vertex_f,
)

CLOSED = "closed"
UNRESTRICTED = "non-restricted"
WALK_CLASSES = (CLOSED, UNRESTRICTED)


def _check_class(walk_class: str) -> str:
    aliases = {"closed": CLOSED, "c": CLOSED, "non-restricted": UNRESTRICTED,
               "unrestricted": UNRESTRICTED, "u": UNRESTRICTED}
    try:
        return aliases[walk_class]
    except KeyError:
        raise ValueError(f"unknown walk class {walk_class!r}") from None


def _C(walk_class: str) -> float:
    return C_CLOSED if walk_class == CLOSED else C_UNRESTRICTED


# --------------------------------------------------------------------------
# The basic asymptotic transform
# --------------------------------------------------------------------------

GFun = Callable[[Jet], Jet]


def asym_value(g: GFun, m: int, y0: float, M: int) -> float:
    """``sum_{i<=M} gamma^{(m)}_i y^(i+1) (d/dy)^i (y^(i-1) g(y))`` at ``y0``."""
    gam = recip_gamma_coeffs(m, M)
    Y = Jet.variable(y0, M + 1)
    gj = g(Y)
    total = 0.0
    for i in range(M + 1):
        if gam[i] == 0.0:
            continue
        inner = gj * Y ** (i - 1)
        total += gam[i] * y0 ** (i + 1) * inner.derivative(i)
    return float(total)


def asym_series(g: GFun, m: int, M: int) -> YSeries:
    """The same sum as a power series in y, exact through ``y^M``."""
    gam = recip_gamma_coeffs(m, M)
    gj = g(Jet.variable(0.0, M + 2))
    gs = YSeries.from_jet(gj, M + 1)
    total = YSeries({}, M)
    for i in range(M + 1):
        if gam[i] == 0.0:
            continue
        term = gs.shift(i - 1)
        for _ in range(i):
            term = term.diff()
        total = total + term.shift(i + 1).scale(gam[i])
    return YSeries(total.coeffs, M)


def coeff_asym(g: Sequence[float], m: int, n: float, M: int) -> float:
    """Asymptotic n-th Taylor coefficient of ``g(1/ln(1-w)) / (1-w)^m``.

    ``g`` is given by its polynomial coefficients ``b_0, b_1, ...``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if M < 0 or M > 20:
        raise ValueError("M must lie in 0..20")
    b = [float(v) for v in g]

    def poly(Y: Jet) -> Jet:
        acc = Jet.constant(0.0, Y.order)
        for c in reversed(b):
            acc = acc * Y + c
        return acc

    y0 = -1.0 / math.log(n)
    return n ** (m - 1) * asym_value(poly, m, y0, M)


# --------------------------------------------------------------------------
# Moment expansions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentExpansion:
    """``sum_j logcoeffs[j] * n^r / ln(n)^j`` together with its finite-n value."""

    r: int
    walk_class: str
    logcoeffs: dict[int, float]
    M: int
    n: float | None = None
    value: float | None = None

    def evaluate(self, n: float) -> float:
        L = math.log(n)
        return n**self.r * sum(c / L**j for j, c in self.logcoeffs.items())

    def leading(self) -> tuple[int, float]:
        nz = [(j, c) for j, c in sorted(self.logcoeffs.items()) if abs(c) > 0.0]
        return nz[0] if nz else (self.M + 1, 0.0)

    def to_rows(self) -> list[tuple[int, float]]:
        return sorted(self.logcoeffs.items())


def _series_to_logcoeffs(s: YSeries, scale: float, M: int) -> dict[int, float]:
    # y^j = (-1)^j / ln(n)^j
    return {j: scale * (-1) ** j * s.coeff(j) + 0.0 for j in range(M + 1)}


def _first_moment_parts(walk_class: str, k: int):
    C = _C(walk_class)
    m = 1 if walk_class == CLOSED else 2
    pref = 2.0 if walk_class == CLOSED else 1.0
    return (lambda Y: vertex_f(1, k, Y, C)), m, pref


def first_moment(walk_class: str, n: float, k: int, M: int) -> float:
    """Asymptotic ``E_n(N_2k)`` to order ``1/ln(n)^M``.

    Closed walks have length 2n, non-restricted walks length n.
    """
    walk_class = _check_class(walk_class)
    if n < 3:
        raise ValueError("n must be >= 3")
    if M < 0 or M > 10:
        raise ValueError("M must lie in 0..10")
    g, m, pref = _first_moment_parts(walk_class, k)
    return pref * n * asym_value(g, m, -1.0 / math.log(n), M)


def first_moment_expansion(walk_class: str, k: int, M: int, n: float | None = None) -> MomentExpansion:
    walk_class = _check_class(walk_class)
    g, m, pref = _first_moment_parts(walk_class, k)
    s = asym_series(g, m, M)
    value = None if n is None else pref * n * asym_value(g, m, -1.0 / math.log(n), M)
    return MomentExpansion(1, walk_class, _series_to_logcoeffs(s, pref, M), M, n, value)


# --------------------------------------------------------------------------
# Integral tables
# --------------------------------------------------------------------------


@dataclass
class IntegralTable:
    """``(I(F), script-I(F))`` by matrix.

    Two-vertex matrices are computed on demand by quadrature; larger ones
    must be supplied (for instance from a cache file) or computed through
    ``budget``/``seed`` when ``compute`` is set.
    """

    entries: dict[str, tuple[float, float]] = field(default_factory=dict)
    compute: bool = False
    budget: int = 200_000
    seed: int = 20240601

    def get(self, F: BalancedMatrix) -> tuple[float, float]:
        key = matrix_key(F)
        if key not in self.entries:
            if F.r == 2 or self.compute:
                gi, gs = integrals(F, self.budget, self.seed)
                self.entries[key] = (gi.value, gs.value)
            else:
                raise MissingCacheError([(F.r, key)])
        return self.entries[key]

    def require(self, mats: Sequence[BalancedMatrix]) -> None:
        missing = [(F.r, matrix_key(F)) for F in mats
                   if F.r > 2 and not self.compute and matrix_key(F) not in self.entries]
        if missing:
            raise MissingCacheError(missing)

    @classmethod
    def from_jsonl(cls, lines, **kw) -> "IntegralTable":
        t = cls(**kw)
        for line in lines:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            F = BalancedMatrix(tuple(tuple(r) for r in rec["rows"]))
            t.entries[matrix_key(F)] = (rec["I"], rec["scriptI"])
        return t


def moment_graphs(r: int, M: int, cutoff: int | None = None) -> dict[tuple[int, ...], list[BalancedMatrix]]:
    """Matrices entering the r-th moment, grouped by degree vector.

    A matrix F counts when ``K(F) = sum_j (h_j - 1) <= cutoff`` with default
    cutoff ``M - r``.
    """
    if cutoff is None:
        cutoff = M - r
    out: dict[tuple[int, ...], list[BalancedMatrix]] = {}
    for K in range(0, max(cutoff, -1) + 1):
        for h in degree_vectors(r, K + r):
            mats = enumerate_balanced(r, h)
            if mats:
                out[h] = mats
    return out


def _sym_product(fs: Callable[[int, int], Jet], h: Sequence[int], ks: Sequence[int]) -> Jet:
    r = len(h)
    total = None
    count = 0
    for perm in itertools.permutations(range(r)):
        prod = None
        for j in range(r):
            f = fs(h[j], ks[perm[j]])
            prod = f if prod is None else prod * f
        total = prod if total is None else total + prod
        count += 1
    return total * (1.0 / count)


def _sym_shifted(fs, h: Sequence[int], ks: Sequence[int]) -> Jet:
    """``(1/r!) sum_sigma sum_q f_{h_q+1} prod_{j != q} f_{h_j}``."""
    r = len(h)
    total = None
    count = 0
    for perm in itertools.permutations(range(r)):
        for q in range(r):
            prod = None
            for j in range(r):
                f = fs(h[j] + (j == q), ks[perm[j]])
                prod = f if prod is None else prod * f
            total = prod if total is None else total + prod
        count += 1
    return total * (1.0 / count)


def moment_full(walk_class: str, ks: Sequence[int], n: float | None, M: int,
                cutoff: int | None = None, table: IntegralTable | None = None) -> MomentExpansion:
    """Joint moment ``E(N_{2k_1} ... N_{2k_r})`` with log corrections to order M."""
    walk_class = _check_class(walk_class)
    ks = tuple(int(k) for k in ks)
    r = len(ks)
    if r == 0:
        raise ValueError("need at least one multiplicity index")
    if r == 1:
        return first_moment_expansion(walk_class, ks[0], M, n)
    table = table or IntegralTable()
    groups = moment_graphs(r, M, cutoff)
    table.require([F for mats in groups.values() for F in mats])
    C = _C(walk_class)
    y0 = None if n is None else -1.0 / math.log(n)

    def fs(m: int, k: int):
        return lambda Y: vertex_f(m, k, Y, C)

    total_series = YSeries({}, M)
    total_value = 0.0
    for h, mats in sorted(groups.items()):
        s_I = 0.0
        s_sI = 0.0
        for F in mats:
            vI, vS = table.get(F)
            w = float(mult_weight(F)) * cofactor(F)
            s_I += w * vI
            s_sI += w * vS
        if walk_class == CLOSED:
            def g(Y, h=h, s_I=s_I):
                return _sym_product(lambda m, k: fs(m, k)(Y), h, ks) * s_I
            m_idx = r - 1
            pref = 2.0 * math.pi / 2 ** (r - 1)
        else:
            def g(Y, h=h, s_I=s_I, s_sI=s_sI):
                f = lambda m, k: fs(m, k)(Y)
                return _sym_product(f, h, ks) * s_sI + _sym_shifted(f, h, ks) * s_I
            m_idx = r + 1
            pref = 1.0 / 4 ** (r - 1)
        total_series = total_series + asym_series(g, m_idx, M).scale(pref)
        if y0 is not None:
            total_value += pref * asym_value(g, m_idx, y0, M)
    logc = _series_to_logcoeffs(total_series, 1.0, M)
    value = None if n is None else n**r * total_value
    return MomentExpansion(r, walk_class, logc, M, n, value)


def central_second_from_full(walk_class: str, k1: int, k2: int, M: int = 8,
                             table: IntegralTable | None = None) -> MomentExpansion:
    """``E(N N') - E(N) E(N')`` assembled from :func:`moment_full` expansions."""
    walk_class = _check_class(walk_class)
    raw = moment_full(walk_class, (k1, k2), None, M, table=table)
    e1 = first_moment_expansion(walk_class, k1, M)
    e2 = first_moment_expansion(walk_class, k2, M)
    prod: dict[int, float] = {}
    for i, a in e1.logcoeffs.items():
        for j, b in e2.logcoeffs.items():
            if i + j <= M:
                prod[i + j] = prod.get(i + j, 0.0) + a * b
    logc = {j: raw.logcoeffs.get(j, 0.0) - prod.get(j, 0.0) for j in range(M + 1)}
    return MomentExpansion(2, walk_class, logc, M)


# --------------------------------------------------------------------------
# Second central moment, closed formulas
# --------------------------------------------------------------------------


def _h_constants(sums: Mapping[int, GraphSumRecord]) -> tuple[float, float]:
    if 2 not in sums:
        raise MissingCacheError([2])
    rec = sums[2]
    # sum_I(2) = H4 / 2 and sum_scriptI(2) = 2 H3
    return rec.sum_scriptI / 2.0, 2.0 * rec.sum_I


def central_scale(walk_class: str, n: float) -> float:
    """``c n / ln(n)^3`` with c = 2 pi^2 (closed) or pi^2 (non-restricted)."""
    walk_class = _check_class(walk_class)
    c = 2.0 * math.pi**2 if walk_class == CLOSED else math.pi**2
    return c * n / math.log(n) ** 3


def second_moment_constants(walk_class: str, k1: int, k2: int,
                            sums: Mapping[int, GraphSumRecord]) -> tuple[float, float]:
    """``(A, B)`` with central second moment ``scale^2 (A - B / ln n)``."""
    walk_class = _check_class(walk_class)
    H3, H4 = _h_constants(sums)
    g = EULER_GAMMA
    if walk_class == CLOSED:
        L = 0.5 * H4 * math.pi**3 - 4.0 * ZETA2
        inner = (k1 + k2) * math.pi / 2 + 2 * g + math.pi * (1 + 2 * C_CLOSED)
        return L, 3.0 * (L * inner + 8.0 * ZETA3)
    L = H3 * math.pi**2 / 8 + 0.5 - math.pi**2 / 12
    inner = (k1 + k2) * math.pi / 2 + 2 * g + math.pi * (1 + 2 * C_UNRESTRICTED) - 4.0
    corr = L * inner + ZETA3 - ZETA2 + H3 * math.pi**2 / 8 + H4 * math.pi**3 / 24
    return 8.0 * L, 24.0 * corr


def second_moment_central(walk_class: str, n: float, k1: int, k2: int,
                          sums: Mapping[int, GraphSumRecord]) -> float:
    """Second central moment, leading term plus first logarithmic correction."""
    A, B = second_moment_constants(walk_class, k1, k2, sums)
    return central_scale(walk_class, n) ** 2 * (A - B / math.log(n))


# --------------------------------------------------------------------------
# Leading centralized moments
# --------------------------------------------------------------------------


def _gamma_conv(m_outer: int, m_inner: int, p: int) -> float:
    """``sum_{nu<=p} gamma^{(m_outer)}_{p-nu} (-gamma^{(m_inner)}_1)^nu / nu!``."""
    if p < 0:
        return 0.0
    go = recip_gamma_coeffs(m_outer, p)
    g1 = recip_gamma_coeffs(m_inner, 1)[1]
    return sum(go[p - nu] * (-g1) ** nu / math.factorial(nu) for nu in range(p + 1))


def central_moment_leading(walk_class: str, order: int, ks: Sequence[int] | None,
                           sums: Mapping[int, GraphSumRecord]) -> float:
    """Constant c with central moment ``~ c * central_scale(n)^order``.

    Sums the dam-free contributions of all matrices with every degree 2
    (through the cached graph sums for r = 2..order) and the single-edge
    contribution.
    """
    walk_class = _check_class(walk_class)
    if order < 1:
        raise ValueError("order must be >= 1")
    if ks is not None and len(ks) != order:
        raise ValueError("k-vector length must equal the order")
    missing = [r for r in range(2, order + 1) if r not in sums]
    if missing:
        raise MissingCacheError(missing)
    fact = math.factorial(order)
    total = 0.0
    for r in range(2, order + 1):
        p = order - r
        rec = sums[r]
        base = fact * (-math.pi / 2) ** r * 2**p * (-1) ** p / math.factorial(r)
        if walk_class == CLOSED:
            total += base * 4 * math.pi * rec.sum_I * (r - 1) * _gamma_conv(r, 1, p)
        else:
            n1 = rec.sum_scriptI * _gamma_conv(r + 1, 2, p)
            n2 = -rec.sum_scriptI * _gamma_conv(r + 2, 2, p - 1)
            n3 = math.pi * (r - 1) * rec.sum_I * _gamma_conv(r + 2, 2, p - 1)
            total += base * 4 * (n1 + n2 + n3)
    m1 = 1 if walk_class == CLOSED else 2
    total += fact * 2**order * (-1) ** order * _gamma_conv(m1, m1, order)
    return total


# --------------------------------------------------------------------------
# Centralization
# --------------------------------------------------------------------------


def centralize(raw: Mapping[frozenset, float] | Callable[[frozenset], float], p: int) -> float:
    """``E prod_i (X_i - E X_i)`` from joint raw moments over index subsets.

    ``raw(S)`` is ``E prod_{i in S} X_i`` for subsets S of ``{0..p-1}``.
    """
    get = raw if callable(raw) else (lambda S: raw[S])
    idx = range(p)
    total = 0.0
    for size in range(p + 1):
        for B in itertools.combinations(idx, size):
            rest = frozenset(set(idx) - set(B))
            term = (-1) ** size * (get(rest) if rest else 1.0)
            for j in B:
                term *= get(frozenset([j]))
            total += term
    return total


def central_moments(raw_powers: Sequence[float]) -> list[float]:
    """Central moments of one variable from ``raw_powers[j] = E X^j``.

    ``raw_powers[0]`` must be 1.  Returns central moments of orders 0..p.
    """
    out = []
    for p in range(len(raw_powers)):
        out.append(centralize(lambda S: raw_powers[len(S)], p))
    return out


# --------------------------------------------------------------------------
# Characteristic functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CharSeries:
    coeffs: tuple[complex, ...]
    stderr: tuple[float, ...]
    r_max: int

    def __call__(self, t: complex) -> complex:
        return sum(c * t**j for j, c in enumerate(self.coeffs))

    def to_json(self) -> str:
        return json.dumps({"coeffs": [{"re": c.real, "im": c.imag, "stderr": s}
                                      for c, s in zip(self.coeffs, self.stderr)],
                           "r_max": self.r_max})


@dataclass(frozen=True)
class CharResult:
    series: CharSeries
    value: complex
    value_stderr: float


def _pmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.convolve(a, b)[: a.size]


def _exp_linear(a: complex, R: int) -> np.ndarray:
    return np.array([a**j / math.factorial(j) for j in range(R + 1)], dtype=complex)


def _recip_gamma_poly(m: int, s: complex, R: int) -> np.ndarray:
    """Coefficients in t of ``1/Gamma(m + s t)``."""
    g = recip_gamma_coeffs(m, R)
    return np.array([g[j] * s**j for j in range(R + 1)], dtype=complex)


def _monomial(c: complex, r: int, R: int) -> np.ndarray:
    out = np.zeros(R + 1, dtype=complex)
    if r <= R:
        out[r] = c
    return out


def _need(sums: Mapping[int, GraphSumRecord], r_max: int) -> None:
    missing = [r for r in range(2, r_max + 1) if r not in sums]
    if missing:
        raise MissingCacheError(missing)


def _assemble(base: np.ndarray, terms: list[tuple[np.ndarray, float]]) -> tuple[np.ndarray, np.ndarray]:
    coeffs = base.copy()
    var = np.zeros(base.size)
    for poly, se in terms:
        coeffs = coeffs + poly
        var += (np.abs(poly) * se) ** 2
    return coeffs, np.sqrt(var)


def char_closed(lam: Sequence[float] | float, t: complex, r_max: int,
                sums: Mapping[int, GraphSumRecord], order: int = 8) -> CharResult:
    """Characteristic function of the centred, rescaled closed-walk range."""
    _need(sums, r_max)
    L = float(np.sum(lam))
    s = -1j * L / (2 * math.pi)  # i tau / 2pi with tau = L t, sign folded in Gamma argument
    R = order
    pre = _exp_linear(1j * EULER_GAMMA * L / (2 * math.pi), R)
    base = _pmul(pre, _recip_gamma_poly(1, s, R))
    terms = []
    for r in range(2, r_max + 1):
        rec = sums[r]
        mono = _monomial((-1j * L / 8) ** r * (r - 1) / math.factorial(r) * 4 * math.pi, r, R)
        poly = _pmul(pre, _pmul(mono, _recip_gamma_poly(r, s, R)))
        terms.append((poly * rec.sum_I, rec.sum_I_stderr))
    coeffs, se = _assemble(base, terms)
    series = CharSeries(tuple(complex(c) for c in coeffs), tuple(float(v) for v in se), r_max)
    value, vse = char_closed_value(lam, t, r_max, sums)
    return CharResult(series, value, vse)


def char_closed_value(lam, t: complex, r_max: int, sums: Mapping[int, GraphSumRecord]) -> tuple[complex, float]:
    """Pointwise evaluation with the reciprocal Gamma function."""
    _need(sums, r_max)
    tau = complex(t) * float(np.sum(lam))
    x = 1j * tau / (2 * math.pi)
    val = complex(sps.rgamma(1 - x))
    var = 0.0
    for r in range(2, r_max + 1):
        rec = sums[r]
        w = 4 * math.pi * (-1j * tau / 8) ** r * (r - 1) / math.factorial(r) * complex(sps.rgamma(r - x))
        val += w * rec.sum_I
        var += (abs(w) * rec.sum_I_stderr) ** 2
    pre = cmath.exp(EULER_GAMMA * x)
    return pre * val, abs(pre) * math.sqrt(var)


def char_brownian(t: complex, r_max: int, sums: Mapping[int, GraphSumRecord],
                  order: int = 8) -> CharResult:
    """Characteristic function of the renormalized intersection local time."""
    _need(sums, r_max)
    R = order
    s = 1j / (2 * math.pi)
    pre = _exp_linear((1 - EULER_GAMMA) * 1j / (2 * math.pi), R)
    base = _pmul(pre, _recip_gamma_poly(2, s, R))
    terms = []
    for r in range(2, r_max + 1):
        rec = sums[r]
        c = 4 * (1j) ** r / (8**r * math.factorial(r))
        g = _recip_gamma_poly(r + 2, s, R)
        p_s = _pmul(pre, _pmul(_monomial(c * (r + 1), r, R), g))
        p_i = _pmul(pre, _pmul(_monomial(c * 0.5j * (r - 1), r + 1, R), g))
        terms.append((p_s * rec.sum_scriptI, rec.sum_scriptI_stderr))
        terms.append((p_i * rec.sum_I, rec.sum_I_stderr))
    coeffs, se = _assemble(base, terms)
    series = CharSeries(tuple(complex(c) for c in coeffs), tuple(float(v) for v in se), r_max)
    value, vse = char_brownian_value(t, r_max, sums)
    return CharResult(series, value, vse)


def char_brownian_value(t: complex, r_max: int, sums: Mapping[int, GraphSumRecord]) -> tuple[complex, float]:
    _need(sums, r_max)
    t = complex(t)
    x = 1j * t / (2 * math.pi)
    val = complex(sps.rgamma(2 + x))
    var = 0.0
    for r in range(2, r_max + 1):
        rec = sums[r]
        c = 4 * (1j * t) ** r / (8**r * math.factorial(r)) * complex(sps.rgamma(r + 2 + x))
        a = c * (r + 1)
        b = c * 0.5j * t * (r - 1)
        val += a * rec.sum_scriptI + b * rec.sum_I
        var += (abs(a) * rec.sum_scriptI_stderr) ** 2 + (abs(b) * rec.sum_I_stderr) ** 2
    pre = cmath.exp((1 - EULER_GAMMA) * x)
    return pre * val, abs(pre) * math.sqrt(var)


def t2_consistency(sums: Mapping[int, GraphSumRecord], lam: float = 1.0) -> dict[str, float]:
    """Second Taylor coefficients of both characteristic functions.

    Reported side by side; the two formulas use different rescalings, so no
    equality is implied.
    """
    cc = char_closed([lam], 0.0, 2, sums, order=2).series.coeffs[2]
    cb = char_brownian(0.0, 2, sums, order=2).series.coeffs[2]
    return {"closed_t2": cc.real, "brownian_t2": cb.real,
            "ratio": cb.real / cc.real if cc.real else float("nan")}
