"""Bessel-K0 graph integrals ``I(F)``, ``script-I(F)`` and their weighted sums.

For a balanced matrix F on r vertices, with ``H(t) = (2/pi) K_0(t)``,

    I(F)  = int prod_{m>1} d^2 y_m  prod_{k != l} H(|y_k - y_l|)^{F_kl}

with ``y_1 = 0`` pinned, and ``script-I(F)`` replaces the monomial by the sum
of its partial derivatives in each edge variable.  Both depend on F only
through the symmetric multiplicities ``w_kl = F_kl + F_lk``.

r = 2 integrals reduce to one radial integral and are done by quadrature.
For r >= 3 the integrals are estimated by importance sampling: points are
placed along a spanning tree of the multigraph, each tree edge drawing its
length from a tabulated radial density matched to the edge's Bessel power.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .graph_enum import BalancedMatrix, cofactor, enumerate_balanced, mult_weight

TWO_OVER_PI = 2.0 / math.pi
LOG_TWO_OVER_PI = math.log(TWO_OVER_PI)

DEFAULT_BUDGET = 200_000
DEFAULT_SEED = 20240601
BATCH = 1 << 15


@dataclass(frozen=True)
class GraphIntegral:
    value: float
    stderr: float
    method: str
    samples: int


@dataclass(frozen=True)
class GraphSumRecord:
    r: int
    count: int
    sum_I: float
    sum_I_stderr: float
    sum_scriptI: float
    sum_scriptI_stderr: float
    seed: int
    budget: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GraphSumRecord":
        data = json.loads(text)
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


class MissingCacheError(LookupError):
    """A required graph-sum or integral record is absent."""

    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__(f"missing cache entries: {self.missing}")


# --------------------------------------------------------------------------
# Radial quadrature (r = 2)
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def radial_moment(n: int) -> float:
    """``int_0^inf t K_0(t)^n dt`` by quadrature in ``u = ln t``."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def f(u: float) -> float:
        t = math.exp(u)
        return t * t * special.k0(t) ** n

    pieces = [(-60.0, -20.0), (-20.0, -3.0), (-3.0, 0.0), (0.0, 2.0), (2.0, math.log(80.0))]
    total = 0.0
    for a, b in pieces:
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return total


def planar_power(n: int) -> float:
    """``int_{R^2} H(|y|)^n d^2 y`` with ``H = (2/pi) K_0``."""
    return 2.0 * math.pi * TWO_OVER_PI**n * radial_moment(n)


def _pair_weight(F: BalancedMatrix) -> np.ndarray:
    a = np.array(F.rows, dtype=np.int64)
    w = a + a.T
    np.fill_diagonal(w, 0)
    return w


def _two_point(n: int) -> tuple[float, float]:
    # n = total multiplicity between the two vertices
    return planar_power(n), n * planar_power(n - 1)


# --------------------------------------------------------------------------
# Importance sampling (r >= 3)
# --------------------------------------------------------------------------


U_MIN, U_MAX, U_CELLS = -30.0, math.log(60.0), 6000


@lru_cache(maxsize=None)
def _radial_table(a: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Piecewise-uniform density in ``u = ln t`` proportional to ``t^2 K_0(t)^a``.

    Returns cell edges, cumulative probabilities at the edges and the
    constant density within each cell.
    """
    edges = np.linspace(U_MIN, U_MAX, U_CELLS + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    t = np.exp(mids)
    mass = t * t * special.k0(t) ** a * np.diff(edges)
    mass /= mass.sum()
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    cdf[-1] = 1.0
    dens = mass / np.diff(edges)
    return edges, cdf, dens


def _sample_u(a: int, xi: np.ndarray) -> np.ndarray:
    edges, cdf, _ = _radial_table(a)
    cell = np.clip(np.searchsorted(cdf, xi, side="right") - 1, 0, U_CELLS - 1)
    frac = (xi - cdf[cell]) / (cdf[cell + 1] - cdf[cell])
    return edges[cell] + frac * (edges[cell + 1] - edges[cell])


def _log_density_u(a: int, u: np.ndarray) -> np.ndarray:
    edges, _, dens = _radial_table(a)
    cell = np.clip(((u - U_MIN) / (U_MAX - U_MIN) * U_CELLS).astype(np.int64), 0, U_CELLS - 1)
    with np.errstate(divide="ignore"):
        return np.log(dens[cell])


def _spanning_tree(w: np.ndarray) -> list[tuple[int, int]]:
    """Maximum-weight spanning tree grown from vertex 0 (Prim)."""
    r = w.shape[0]
    inside = [0]
    tree: list[tuple[int, int]] = []
    while len(inside) < r:
        best = None
        for p in inside:
            for c in range(r):
                if c in inside or w[p, c] == 0:
                    continue
                if best is None or w[p, c] > w[best[0], best[1]]:
                    best = (p, c)
        if best is None:
            raise ValueError("graph is not connected")
        tree.append(best)
        inside.append(best[1])
    return tree


def _log_H(t: np.ndarray) -> np.ndarray:
    # log((2/pi) K_0(t)) without underflow for large t
    return LOG_TWO_OVER_PI + np.log(special.k0e(t)) - t


def _batch(w: np.ndarray, tree, n: int, seed_seq: np.random.SeedSequence):
    """Per-sample weights for I and script-I from one deterministic stream."""
    rng = np.random.default_rng(seed_seq)
    r = w.shape[0]
    pos = np.zeros((n, r, 2))
    log_q = np.zeros(n)
    for p, c in tree:
        a = int(w[p, c])
        # defensive mixture with the a = 1 density keeps script-I variance finite
        comps = (a, 1) if a > 1 else (1,)
        pick = rng.integers(0, len(comps), size=n)
        xi = rng.random(n)
        u = np.empty(n)
        for ci, comp in enumerate(comps):
            sel = pick == ci
            u[sel] = _sample_u(comp, xi[sel])
        dens_u = sum(np.exp(_log_density_u(comp, u)) for comp in comps) / len(comps)
        t = np.exp(u)
        phi = rng.random(n) * 2.0 * math.pi
        pos[:, c, 0] = pos[:, p, 0] + t * np.cos(phi)
        pos[:, c, 1] = pos[:, p, 1] + t * np.sin(phi)
        # planar density of the displacement: dens_u / (2 pi t^2)
        log_q += np.log(dens_u) - math.log(2.0 * math.pi) - 2.0 * u
    log_f = np.zeros(n)
    pairs = [(i, j) for i in range(r) for j in range(i + 1, r) if w[i, j]]
    log_h = {}
    for i, j in pairs:
        d = np.hypot(pos[:, i, 0] - pos[:, j, 0], pos[:, i, 1] - pos[:, j, 1])
        lh = _log_H(d)
        log_h[(i, j)] = lh
        log_f += w[i, j] * lh
    log_wt = log_f - log_q
    wt_I = np.exp(log_wt)
    wt_sI = np.zeros(n)
    for (i, j), lh in log_h.items():
        wt_sI += w[i, j] * np.exp(log_wt - lh)
    return wt_I, wt_sI


def _seed_for(label: list[int], budget: int, seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(budget)] + [int(v) for v in label])


def _monte_carlo(w: np.ndarray, budget: int, seq: np.random.SeedSequence,
                 threads: int | None = None):
    if budget < 2:
        raise ValueError("Monte Carlo budget must be >= 2")
    tree = _spanning_tree(w)
    nb = max(1, math.ceil(budget / BATCH))
    sizes = [BATCH] * (nb - 1) + [budget - BATCH * (nb - 1)]
    children = seq.spawn(nb)
    workers = threads or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda a: _batch(w, tree, *a), zip(sizes, children)))
    else:
        results = [_batch(w, tree, s, ch) for s, ch in zip(sizes, children)]
    out = []
    for k in (0, 1):
        s1 = 0.0
        s2 = 0.0
        for res in results:  # fixed order keeps the reduction reproducible
            s1 += float(np.sum(res[k]))
            s2 += float(np.sum(res[k] ** 2))
        mean = s1 / budget
        var = max(s2 / budget - mean * mean, 0.0)
        out.append(GraphIntegral(mean, math.sqrt(var / max(budget - 1, 1)), "monte-carlo", budget))
    return out[0], out[1]


def _pair_integrals(w: np.ndarray, budget: int, seq_label: list[int], seed: int,
                    threads: int | None) -> tuple[GraphIntegral, GraphIntegral]:
    r = w.shape[0]
    _spanning_tree(w)  # connectivity check
    if r == 2:
        vI, vS = _two_point(int(w[0, 1]))
        return (GraphIntegral(vI, 0.0, "radial-quadrature", 0),
                GraphIntegral(vS, 0.0, "radial-quadrature", 0))
    return _monte_carlo(w, budget, _seed_for(seq_label, budget, seed), threads)


def integrals(F: BalancedMatrix, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
              threads: int | None = None) -> tuple[GraphIntegral, GraphIntegral]:
    """``(I(F), script-I(F))``, sharing samples when Monte Carlo is used.

    The random stream is derived from (seed, budget, F), so results do not
    depend on the thread count.
    """
    if F.r < 2:
        raise ValueError("need at least two vertices")
    if any(F.rows[i][i] for i in range(F.r)):
        raise ValueError("loops are not allowed in graph integrals")
    label = [F.r] + [v for row in F.rows for v in row]
    return _pair_integrals(_pair_weight(F), budget, label, seed, threads)


def integral_I(F: BalancedMatrix, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
               threads: int | None = None) -> GraphIntegral:
    return integrals(F, budget, seed, threads)[0]


def integral_scriptI(F: BalancedMatrix, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
                     threads: int | None = None) -> GraphIntegral:
    return integrals(F, budget, seed, threads)[1]


# --------------------------------------------------------------------------
# Graph sums
# --------------------------------------------------------------------------


def _canonical(w: np.ndarray) -> tuple[int, ...]:
    r = w.shape[0]
    best = None
    for perm in itertools.permutations(range(r)):
        p = list(perm)
        key = tuple(w[np.ix_(p, p)].ravel())
        if best is None or key < best:
            best = key
    return best


def graph_sum(r: int, budget: int = DEFAULT_BUDGET, seed: int = DEFAULT_SEED,
              threads: int | None = None) -> GraphSumRecord:
    """Weighted sums over all strongly connected matrices with all degrees 2.

    ``sum_I = sum_F I(F) M(F) cof(A - F)`` and likewise for script-I.  Matrices
    with the same pair multiplicities up to relabelling share one integral.
    """
    if r < 2 or r > 6:
        raise ValueError("r must lie in 2..6")
    mats = enumerate_balanced(r, (2,) * r)
    classes: dict[tuple[int, ...], list[tuple[BalancedMatrix, float]]] = {}
    reps: dict[tuple[int, ...], np.ndarray] = {}
    seen_w: dict[tuple[int, ...], tuple[int, ...]] = {}
    for F in mats:
        w = _pair_weight(F)
        raw = tuple(w.ravel())
        if raw not in seen_w:
            seen_w[raw] = _canonical(w)
        key = seen_w[raw]
        weight = float(mult_weight(F)) * cofactor(F)
        classes.setdefault(key, []).append((F, weight))
        reps.setdefault(key, np.array(key).reshape(r, r))
    sI = sS = vI = vS = 0.0
    for key in sorted(classes):
        tot_w = sum(wt for _, wt in classes[key])
        # label 0 separates class streams from per-matrix streams
        gi, gs = _pair_integrals(reps[key], budget, [0, r, *key], seed, threads)
        sI += tot_w * gi.value
        sS += tot_w * gs.value
        vI += (tot_w * gi.stderr) ** 2
        vS += (tot_w * gs.stderr) ** 2
    return GraphSumRecord(r, len(mats), sI, math.sqrt(vI), sS, math.sqrt(vS), seed, budget)


def quadrature_record() -> GraphSumRecord:
    """The r = 2 record, exact up to quadrature error."""
    return graph_sum(2, 0, 0)


def h3_constant() -> float:
    """``H_3 = script-I(F_2) / 4 = (2/pi)^3 int_{R^2} K_0^3``."""
    return planar_power(3)


def h4_constant() -> float:
    """``H_4 = I(F_2) = (2/pi)^4 int_{R^2} K_0^4``."""
    return planar_power(4)


# --------------------------------------------------------------------------
# Cache files
# --------------------------------------------------------------------------


def cache_path(cache_dir: str | os.PathLike, r: int, budget: int, seed: int) -> Path:
    return Path(cache_dir) / f"graphsum_r{r}_b{budget}_s{seed}.json"


def save_record(rec: GraphSumRecord, cache_dir: str | os.PathLike) -> Path:
    path = cache_path(cache_dir, rec.r, rec.budget, rec.seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rec.to_json() + "\n")
    return path


def load_sums(cache_dir: str | os.PathLike | None, r_max: int, budget: int, seed: int,
              ) -> dict[int, GraphSumRecord]:
    """Records for r = 2..r_max; r = 2 always comes from quadrature."""
    out = {2: quadrature_record()} if r_max >= 2 else {}
    missing = []
    for r in range(3, r_max + 1):
        path = cache_path(cache_dir, r, budget, seed) if cache_dir is not None else None
        if path is None or not path.exists():
            missing.append(r)
            continue
        out[r] = GraphSumRecord.from_json(path.read_text())
    if missing:
        raise MissingCacheError(missing)
    return out
