"""Exact enumeration and seeded Monte Carlo of planar simple random walks.

Multiplicity conventions:

* closed walks of length L: the positions at times 0..L-1 are the visits
  (start and end are identified) and a point visited k times has
  multiplicity 2k;
* non-restricted walks of n steps: each interior visit contributes 2 and
  each endpoint visit 1, so only the endpoints can carry odd multiplicity.

Both samplers and the closed-walk enumerator use the rotated lattice: the
coordinates ``u = x + y`` and ``v = x - y`` of a planar simple walk perform
two independent +-1 walks.
"""

from __future__ import annotations

import io
import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .moments import central_moments

MAX_CLOSED_L = 14
MAX_UNRESTRICTED_N = 7
MAX_MC_N = 2**20


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    root: int
    stream: int = 0
    samples: int = 10_000

    def __post_init__(self):
        if not 0 <= self.root < 2**64:
            raise ValueError("root seed must be a 64-bit unsigned integer")
        if self.samples < 2:
            raise ValueError("need at least two samples")

    def chunk_seed(self, chunk: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.root, spawn_key=(self.stream, chunk))


@dataclass
class ExactAggregates:
    """Exact sums over all walks of one length.

    ``sums[k]`` is ``sum_w N_2k(w)``, ``products[ks]`` is
    ``sum_w prod_i N_2k_i(w)`` and ``point_counts[(y, k)]`` the number of
    walks in which point y has multiplicity exactly 2k.
    """

    walk_class: str
    length: int
    walks: int
    sums: dict[int, int] = field(default_factory=dict)
    products: dict[tuple[int, ...], int] = field(default_factory=dict)
    point_counts: dict[tuple[tuple[int, int], int], int] = field(default_factory=dict)

    def mean(self, k: int) -> float:
        return self.sums[k] / self.walks


@dataclass
class WalkStats:
    walk_class: str
    n: int
    length: int
    samples: int
    ks: tuple[int, ...]
    mean: np.ndarray
    stderr: np.ndarray
    central: dict[int, np.ndarray]
    raw_powers: dict[int, np.ndarray]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "samples", "k", "mean", "stderr", "mu2", "mu3", "mu4"])
        for i, k in enumerate(self.ks):
            w.writerow([self.n, self.samples, k, repr(float(self.mean[i])), repr(float(self.stderr[i])),
                        *(repr(float(self.central[p][i])) for p in (2, 3, 4))])
        return buf.getvalue()


# --------------------------------------------------------------------------
# Occupancy counting
# --------------------------------------------------------------------------


def _occupancy(codes: np.ndarray, weights: np.ndarray, span: int, ks: Sequence[int]) -> np.ndarray:
    """Per-walk counts of points with multiplicity ``2k``.

    ``codes`` holds one row of encoded positions per walk, ``weights`` the
    multiplicity contributed by each visit (broadcast over rows).
    """
    W, T = codes.shape
    keys = (np.arange(W, dtype=np.int64)[:, None] * span + codes).ravel()
    w = np.broadcast_to(weights, codes.shape).ravel()
    uniq, inv = np.unique(keys, return_inverse=True)
    mult = np.bincount(inv, weights=w).astype(np.int64)
    row = uniq // span
    out = np.zeros((W, len(ks)), dtype=np.int64)
    for i, k in enumerate(ks):
        sel = mult == 2 * k
        out[:, i] = np.bincount(row[sel], minlength=W)
    return out


def _encode(x: np.ndarray, y: np.ndarray, R: int) -> np.ndarray:
    side = 2 * R + 1
    return (x + R) * side + (y + R)


def _bridges(n: int) -> np.ndarray:
    """All +-1 sequences of length 2n with n up-steps."""
    L = 2 * n
    combos = list(itertools.combinations(range(L), n))
    out = -np.ones((len(combos), L), dtype=np.int64)
    for i, c in enumerate(combos):
        out[i, list(c)] = 1
    return out


def _closed_positions(du: np.ndarray, dv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions at times 0..L-1 from rotated steps (rows broadcast)."""
    u = np.cumsum(du, axis=1)
    v = np.cumsum(dv, axis=1)
    x = (u + v) // 2
    y = (u - v) // 2
    zero = np.zeros((x.shape[0], 1), dtype=np.int64)
    return np.hstack([zero, x[:, :-1]]), np.hstack([zero, y[:, :-1]])


# --------------------------------------------------------------------------
# Exhaustive enumeration
# --------------------------------------------------------------------------


def enumerate_closed(L: int, ks: Iterable[int] = (1, 2, 3), points: Iterable = (),
                     products: Iterable[Sequence[int]] = ()) -> ExactAggregates:
    """Exact aggregates over all closed walks of length L (L even, L <= 14)."""
    if L < 2 or L % 2:
        raise ValueError("L must be a positive even integer")
    if L > MAX_CLOSED_L:
        walks = math.comb(L, L // 2) ** 2
        raise EnumerationTooLarge(f"L={L} means {walks} closed walks; the limit is L={MAX_CLOSED_L}")
    ks = tuple(sorted(set(int(k) for k in ks) | {k for p in products for k in p}))
    products = [tuple(p) for p in products]
    points = [tuple(int(c) for c in p) for p in points]
    n = L // 2
    B = _bridges(n)
    R = n
    span = (2 * R + 1) ** 2
    agg = ExactAggregates("closed", L, 0, {k: 0 for k in ks}, {p: 0 for p in products},
                          {(y, k): 0 for y in points for k in ks})
    pcodes = [int(_encode(np.int64(y[0]), np.int64(y[1]), R)) for y in points]
    weights = np.full(L, 2, dtype=np.int64)
    chunk = max(1, 200_000 // B.shape[0])
    for start in range(0, B.shape[0], chunk):
        du = np.repeat(B[start:start + chunk], B.shape[0], axis=0)
        dv = np.tile(B, (min(chunk, B.shape[0] - start), 1))
        x, y = _closed_positions(du, dv)
        codes = _encode(x, y, R)
        occ = _occupancy(codes, weights, span, ks)
        agg.walks += codes.shape[0]
        for i, k in enumerate(ks):
            agg.sums[k] += int(occ[:, i].sum())
        for p in products:
            prod = np.ones(codes.shape[0], dtype=np.int64)
            for k in p:
                prod *= occ[:, ks.index(k)]
            agg.products[p] += int(prod.sum())
        for y_pt, c in zip(points, pcodes):
            visits = (codes == c).sum(axis=1)
            for k in ks:
                agg.point_counts[(y_pt, k)] += int((visits == k).sum())
    return agg


def _all_steps(n: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(4**n, dtype=np.int64)
    digits = (idx[:, None] // 4 ** np.arange(n)) % 4
    dx = np.array([1, -1, 0, 0])[digits]
    dy = np.array([0, 0, 1, -1])[digits]
    return dx, dy


def _unrestricted_weights(n: int) -> np.ndarray:
    w = np.full(n + 1, 2, dtype=np.int64)
    w[0] = 1
    w[-1] = 1
    return w


def _unrestricted_occ(dx: np.ndarray, dy: np.ndarray, ks: Sequence[int]) -> np.ndarray:
    W, n = dx.shape
    zero = np.zeros((W, 1), dtype=np.int64)
    x = np.hstack([zero, np.cumsum(dx, axis=1)])
    y = np.hstack([zero, np.cumsum(dy, axis=1)])
    codes = _encode(x, y, n)
    return _occupancy(codes, _unrestricted_weights(n), (2 * n + 1) ** 2, ks)


def enumerate_unrestricted(n: int, ks: Iterable[int] = (1, 2, 3),
                           products: Iterable[Sequence[int]] = ()) -> ExactAggregates:
    """Exact aggregates over all ``4^n`` non-restricted walks with n steps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_UNRESTRICTED_N:
        raise EnumerationTooLarge(f"n={n} means {4**n} walks; the limit is n={MAX_UNRESTRICTED_N}")
    ks = tuple(sorted(set(int(k) for k in ks) | {k for p in products for k in p}))
    products = [tuple(p) for p in products]
    dx, dy = _all_steps(n)
    occ = _unrestricted_occ(dx, dy, ks)
    agg = ExactAggregates("non-restricted", n, occ.shape[0],
                          {k: int(occ[:, i].sum()) for i, k in enumerate(ks)})
    for p in products:
        prod = np.ones(occ.shape[0], dtype=np.int64)
        for k in p:
            prod *= occ[:, ks.index(k)]
        agg.products[p] = int(prod.sum())
    return agg


# --------------------------------------------------------------------------
# Monte Carlo
# --------------------------------------------------------------------------


def _chunk_size(steps: int) -> int:
    return max(1, 2**20 // max(steps, 1))


def _closed_chunk(n: int, count: int, ss: np.random.SeedSequence, ks) -> np.ndarray:
    rng = np.random.default_rng(ss)
    base = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    du = rng.permuted(np.tile(base, (count, 1)), axis=1)
    dv = rng.permuted(np.tile(base, (count, 1)), axis=1)
    x, y = _closed_positions(du, dv)
    codes = _encode(x, y, n)
    return _occupancy(codes, np.full(2 * n, 2, dtype=np.int64), (2 * n + 1) ** 2, ks)


def _unrestricted_chunk(n: int, count: int, ss: np.random.SeedSequence, ks) -> np.ndarray:
    rng = np.random.default_rng(ss)
    d = rng.integers(0, 4, size=(count, n))
    dx = np.array([1, -1, 0, 0])[d]
    dy = np.array([0, 0, 1, -1])[d]
    return _unrestricted_occ(dx, dy, ks)


def _stats(walk_class: str, n: int, length: int, values: np.ndarray, ks, batches: int) -> WalkStats:
    S = values.shape[0]
    v = values.astype(float)
    mean = v.mean(axis=0)
    B = max(2, min(batches, S))
    parts = np.array_split(v, B)
    bm = np.array([p.mean(axis=0) for p in parts])
    stderr = bm.std(axis=0, ddof=1) / math.sqrt(B)
    dev = v - mean
    central = {p: (dev**p).mean(axis=0) for p in range(2, 5)}
    raw = {p: (v**p).mean(axis=0) for p in range(0, 5)}
    return WalkStats(walk_class, n, length, S, tuple(ks), mean, stderr, central, raw)


def _run(chunk_fn, n: int, steps: int, seed: SeedSpec, ks, threads: int | None) -> np.ndarray:
    size = _chunk_size(steps)
    jobs = []
    left = seed.samples
    c = 0
    while left > 0:
        jobs.append((c, min(size, left)))
        left -= size
        c += 1

    def work(job):
        idx, count = job
        return chunk_fn(n, count, seed.chunk_seed(idx), ks)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    return np.vstack(parts)


def mc_closed(n: int, seed: SeedSpec, ks: Sequence[int] = (1, 2, 3), batches: int = 32,
              threads: int | None = None) -> WalkStats:
    """Uniform closed walks of length 2n built from two independent bridges."""
    if not 1 <= n <= MAX_MC_N:
        raise ValueError(f"n must lie in 1..{MAX_MC_N}")
    vals = _run(_closed_chunk, n, 2 * n, seed, tuple(ks), threads)
    return _stats("closed", n, 2 * n, vals, ks, batches)


def mc_unrestricted(n: int, seed: SeedSpec, ks: Sequence[int] = (1, 2, 3), batches: int = 32,
                    threads: int | None = None) -> WalkStats:
    """Uniform non-restricted walks with n steps."""
    if not 1 <= n <= MAX_MC_N:
        raise ValueError(f"n must lie in 1..{MAX_MC_N}")
    vals = _run(_unrestricted_chunk, n, n, seed, tuple(ks), threads)
    return _stats("non-restricted", n, n, vals, ks, batches)


def central_from_raw(stats: WalkStats) -> dict[int, np.ndarray]:
    """Central moments of orders 2..4 recomputed from the raw power means."""
    out = {}
    for i in range(len(stats.ks)):
        cm = central_moments([stats.raw_powers[p][i] for p in range(5)])
        for p in range(2, 5):
            out.setdefault(p, np.zeros(len(stats.ks)))[i] = cm[p]
    return out
