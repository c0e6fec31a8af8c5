"""Balanced integer matrices (Eulerian multidigraphs) and their weights."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence


@dataclass(frozen=True, order=True)
class BalancedMatrix:
    """Adjacency matrix of a balanced multidigraph with zero diagonal.

    ``rows[i][j]`` is the number of edges i -> j.  Row sum i equals column
    sum i; that common value is the degree ``h_i``.
    """

    rows: tuple[tuple[int, ...], ...]

    allow_loops = False

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        r = len(rows)
        if r < 1 or any(len(row) != r for row in rows):
            raise ValueError("matrix must be square")
        if any(v < 0 for row in rows for v in row):
            raise ValueError("entries must be nonnegative")
        if not self.allow_loops and any(rows[i][i] for i in range(r)):
            raise ValueError("diagonal must be zero")
        out_deg = self.degrees
        in_deg = tuple(sum(rows[j][i] for j in range(r) if j != i) for i in range(r))
        if out_deg != in_deg:
            raise ValueError(f"row sums {out_deg} differ from column sums {in_deg}")

    @property
    def r(self) -> int:
        return len(self.rows)

    @property
    def degrees(self) -> tuple[int, ...]:
        """Off-diagonal row sums."""
        return tuple(sum(v for j, v in enumerate(row) if j != i) for i, row in enumerate(self.rows))

    @property
    def edges(self) -> int:
        return sum(self.degrees)

    def transpose(self) -> "BalancedMatrix":
        return type(self)(tuple(zip(*self.rows)))

    def permute(self, perm: Sequence[int]) -> "BalancedMatrix":
        """Relabel vertex ``perm[i]`` as i."""
        return type(self)(tuple(tuple(self.rows[perm[i]][perm[j]] for j in range(self.r))
                                for i in range(self.r)))

    def to_json(self) -> str:
        return json.dumps({"r": self.r, "rows": [list(row) for row in self.rows]})

    @classmethod
    def from_json(cls, text: str) -> "BalancedMatrix":
        data = json.loads(text)
        m = cls(tuple(tuple(row) for row in data["rows"]))
        if m.r != data["r"]:
            raise ValueError("r does not match the row count")
        return m


class LoopyMatrix(BalancedMatrix):
    """Like :class:`BalancedMatrix` but diagonal entries (loops) are allowed.

    Degrees count off-diagonal entries only.
    """

    allow_loops = True


@dataclass(frozen=True)
class GraphWeights:
    cof: int
    mult: Fraction
    trails: int


# --------------------------------------------------------------------------
# Exact linear algebra and connectivity
# --------------------------------------------------------------------------


def bareiss_det(a: Sequence[Sequence[int]]) -> int:
    """Determinant of an integer matrix by fraction-free elimination."""
    m = [list(map(int, row)) for row in a]
    n = len(m)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def laplacian(F: BalancedMatrix) -> list[list[int]]:
    """``A - F`` with A the diagonal of off-diagonal degrees.

    Loop entries are left out: a loop adds equally to a vertex's in and out
    degree and never lies on a spanning arborescence.
    """
    deg = F.degrees
    r = F.r
    return [[(deg[i] if i == j else -F.rows[i][j]) for j in range(r)] for i in range(r)]


def cofactor(F: BalancedMatrix) -> int:
    """Cofactor of ``A - F`` (all cofactors agree for balanced matrices)."""
    L = laplacian(F)
    return bareiss_det([row[1:] for row in L[1:]])


def strongly_connected(F: BalancedMatrix) -> bool:
    """Every vertex reachable from vertex 0 in the graph and its reverse."""
    r = F.r

    def reach(adj) -> set[int]:
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in range(r):
                if j != i and adj(i, j) and j not in seen:
                    seen.add(j)
                    stack.append(j)
        return seen

    fwd = reach(lambda i, j: F.rows[i][j] > 0)
    bwd = reach(lambda i, j: F.rows[j][i] > 0)
    return len(fwd) == r and len(bwd) == r


def mult_weight(F: BalancedMatrix) -> Fraction:
    """``M(F) = prod_{i != j} 1 / F_ij!``."""
    den = 1
    for i, row in enumerate(F.rows):
        for j, v in enumerate(row):
            if i != j:
                den *= math.factorial(v)
    return Fraction(1, den)


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------


def _fill(r: int, h: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    col_left = list(h)
    rows: list[list[int]] = []

    def cells(i: int):
        return [j for j in range(r) if j != i]

    def rec_row(i: int):
        if i == r:
            if all(c == 0 for c in col_left):
                yield tuple(tuple(row) for row in rows)
            return
        row = [0] * r
        js = cells(i)
        # later rows must still be able to fill the remaining column sums
        yield from rec_cell(i, row, js, 0, h[i])

    def rec_cell(i, row, js, pos, left):
        if pos == len(js):
            if left == 0:
                rows.append(row[:])
                # feasibility: remaining rows can cover remaining columns
                if _feasible(i + 1):
                    yield from rec_row(i + 1)
                rows.pop()
            return
        j = js[pos]
        # capacity of the remaining cells in this row
        rest_cap = sum(col_left[jj] for jj in js[pos + 1:])
        lo = max(0, left - rest_cap)
        hi = min(left, col_left[j])
        for v in range(hi, lo - 1, -1):
            row[j] = v
            col_left[j] -= v
            yield from rec_cell(i, row, js, pos + 1, left - v)
            col_left[j] += v
        row[j] = 0

    def _feasible(i0: int) -> bool:
        rem_rows = sum(h[i0:])
        if rem_rows != sum(col_left):
            return False
        # column j can only be fed by remaining rows other than j
        for j in range(r):
            cap = sum(h[i] for i in range(i0, r) if i != j)
            if col_left[j] > cap:
                return False
        return True

    yield from rec_row(0)


def enumerate_balanced(r: int, h: Sequence[int]) -> list[BalancedMatrix]:
    """All strongly connected balanced matrices with degree vector h.

    Returned in lexicographic order of the row-major entries.
    """
    h = tuple(int(v) for v in h)
    if len(h) != r:
        raise ValueError(f"degree vector has length {len(h)}, expected {r}")
    if r < 2:
        raise ValueError("r must be >= 2")
    if any(v < 1 for v in h):
        raise ValueError("all degrees must be >= 1")
    return list(_enumerate_cached(r, h))


@lru_cache(maxsize=None)
def _enumerate_cached(r: int, h: tuple[int, ...]) -> tuple[BalancedMatrix, ...]:
    out = []
    for rows in _fill(r, h):
        F = BalancedMatrix(rows)
        conn = strongly_connected(F)
        cof = cofactor(F)
        if conn != (cof != 0):
            raise AssertionError(f"connectivity and cofactor disagree for {rows}")
        if conn:
            out.append(F)
    out.sort(key=lambda m: tuple(itertools.chain.from_iterable(m.rows)))
    return tuple(out)


def degree_vectors(r: int, total: int, hmin: int = 1) -> Iterator[tuple[int, ...]]:
    """All degree vectors of length r with entries >= hmin summing to total."""
    if r == 0:
        if total == 0:
            yield ()
        return
    for first in range(hmin, total - hmin * (r - 1) + 1):
        for rest in degree_vectors(r - 1, total - first, hmin):
            yield (first,) + rest


# --------------------------------------------------------------------------
# Dam reduction
# --------------------------------------------------------------------------


def find_dam(F: BalancedMatrix) -> int | None:
    """Smallest index with off-diagonal degree 1, or None."""
    for i, h in enumerate(F.degrees):
        if h == 1:
            return i
    return None


def dam_class(F: BalancedMatrix, i0: int | None = None) -> str:
    """'A' when the dam's in- and out-neighbour coincide, else 'B'."""
    if i0 is None:
        i0 = find_dam(F)
    if i0 is None:
        raise ValueError("matrix has no dam")
    r = F.r
    src = next(i for i in range(r) if i != i0 and F.rows[i][i0])
    dst = next(j for j in range(r) if j != i0 and F.rows[i0][j])
    return "A" if src == dst else "B"


def reduce_dam(F: BalancedMatrix) -> LoopyMatrix:
    """Remove the first dam i0, joining its incoming and outgoing edge.

    ``G[i][j] = F[i'][j'] + F[i'][i0] * F[i0][j']`` with ``i' = i + (i >= i0)``.
    When the dam's two neighbours coincide the joined edge becomes a loop.
    """
    i0 = find_dam(F)
    if i0 is None:
        raise ValueError("matrix has no vertex of degree 1")
    r = F.r
    if r < 2:
        raise ValueError("cannot reduce a single vertex")
    idx = [i + (i >= i0) for i in range(r - 1)]
    rows = tuple(tuple(F.rows[a][b] + F.rows[a][i0] * F.rows[i0][b] for b in idx) for a in idx)
    return LoopyMatrix(rows)


# --------------------------------------------------------------------------
# Euler circuits
# --------------------------------------------------------------------------


def euler_circuit_count(F: BalancedMatrix, start_edge: tuple[int, int] | None = None) -> int:
    """Number of Euler circuits with parallel edges distinguishable.

    Circuits are counted as edge sequences beginning with a fixed edge
    (``start_edge`` names its endpoints; any edge gives the same count), which
    by the BEST theorem equals ``cof(A - F) * prod_i (h_i - 1)!``.
    """
    if not strongly_connected(F):
        raise ValueError("Euler circuits need a strongly connected matrix")
    if start_edge is not None:
        i, j = start_edge
        if i == j or F.rows[i][j] == 0:
            raise ValueError(f"no edge {start_edge} in the matrix")
    count = cofactor(F)
    for h in F.degrees:
        count *= math.factorial(h - 1)
    return count


def euler_circuit_search(F: BalancedMatrix, start_edge: tuple[int, int] | None = None) -> int:
    """Euler circuits counted by exhaustive depth-first search (small graphs)."""
    edges = [(i, j) for i, row in enumerate(F.rows) for j, v in enumerate(row) if i != j for _ in range(v)]
    if not edges:
        return 0
    if start_edge is None:
        first = 0
    else:
        first = edges.index(tuple(start_edge))
    used = [False] * len(edges)
    used[first] = True
    start = edges[first][0]

    def dfs(v: int, left: int) -> int:
        if left == 0:
            return 1 if v == start else 0
        total = 0
        for e, (a, b) in enumerate(edges):
            if not used[e] and a == v:
                used[e] = True
                total += dfs(b, left - 1)
                used[e] = False
        return total

    return dfs(edges[first][1], len(edges) - 1)


def weights(F: BalancedMatrix) -> GraphWeights:
    return GraphWeights(cofactor(F), mult_weight(F), euler_circuit_count(F))


def matrix_key(F: BalancedMatrix) -> str:
    return ";".join(",".join(map(str, row)) for row in F.rows)
