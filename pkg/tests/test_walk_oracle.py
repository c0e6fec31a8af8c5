import math

import numpy as np
import pytest

from rwrange import walk_oracle as wo
from rwrange.lattice_green import first_moment_gf, multiplicity_fixed_gf
from rwrange.moments import centralize


def _closed_walks_by_dfs(L):
    """All closed walks of length L as position lists (times 0..L-1)."""
    out = []

    def go(path, left):
        x, y = path[-1]
        if abs(x) + abs(y) > left:
            return
        if left == 0:
            out.append(path[:-1])
            return
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            go(path + [(x + dx, y + dy)], left - 1)

    go([(0, 0)], L)
    return out


def test_small_closed_examples():
    a = wo.enumerate_closed(2, (1,))
    assert a.walks == 4 and a.sums[1] == 8
    b = wo.enumerate_closed(4, (1, 2))
    assert b.walks == 36 and b.sums[1] == 80 and b.sums[2] == 32


@pytest.mark.parametrize("L", [2, 4, 6, 8])
def test_closed_enumeration_against_dfs(L):
    walks = _closed_walks_by_dfs(L)
    ks = (1, 2, 3)
    agg = wo.enumerate_closed(L, ks, points=[(1, 1)], products=[(1, 2)])
    assert agg.walks == len(walks)
    sums = {k: 0 for k in ks}
    prod = 0
    hits = {k: 0 for k in ks}
    for w in walks:
        counts = {}
        for p in w:
            counts[p] = counts.get(p, 0) + 1
        n = {k: sum(1 for c in counts.values() if c == k) for k in ks}
        for k in ks:
            sums[k] += n[k]
            hits[k] += counts.get((1, 1), 0) == k
        prod += n[1] * n[2]
    assert agg.sums == sums
    assert agg.products[(1, 2)] == prod
    assert {k: agg.point_counts[((1, 1), k)] for k in ks} == hits


def test_gf_identities_up_to_ten():
    for L in range(2, 11, 2):
        agg = wo.enumerate_closed(L, (1, 2, 3), points=[(1, 0), (1, 1), (2, 0)])
        for k in (1, 2, 3):
            assert first_moment_gf(k, L)[L] == agg.sums[k]
            for y in [(1, 0), (1, 1), (2, 0)]:
                assert multiplicity_fixed_gf(y, k, L)[L] == agg.point_counts[(y, k)]


def test_enumeration_limits():
    with pytest.raises(wo.EnumerationTooLarge, match="closed walks"):
        wo.enumerate_closed(16)
    with pytest.raises(ValueError):
        wo.enumerate_closed(5)
    with pytest.raises(wo.EnumerationTooLarge):
        wo.enumerate_unrestricted(8)


def test_unrestricted_small():
    a = wo.enumerate_unrestricted(1)
    assert a.walks == 4 and all(v == 0 for v in a.sums.values())
    # interior visits weigh 2 and endpoints 1; N_k counts weight 2k.
    # 12 non-returning walks have one such point, 4 returning walks two
    b = wo.enumerate_unrestricted(2, (1,))
    assert b.sums[1] == 12 * 1 + 4 * 2


def test_unrestricted_invariants():
    dx, dy = wo._all_steps(4)
    occ = wo._unrestricted_occ(dx, dy, (1, 2, 3))
    assert np.all(occ.sum(axis=1) <= 4)


def test_mc_closed_walks_return():
    rng_seed = wo.SeedSpec(1, 0, 50)
    ss = rng_seed.chunk_seed(0)
    rng = np.random.default_rng(ss)
    base = np.array([1] * 6 + [-1] * 6)
    du = rng.permuted(np.tile(base, (20, 1)), axis=1)
    dv = rng.permuted(np.tile(base, (20, 1)), axis=1)
    assert np.all(du.sum(axis=1) == 0) and np.all(dv.sum(axis=1) == 0)
    x = ((du + dv) // 2).sum(axis=1)
    y = ((du - dv) // 2).sum(axis=1)
    assert np.all(x == 0) and np.all(y == 0)
    assert set(map(tuple, np.stack([(du + dv) // 2, (du - dv) // 2], -1).reshape(-1, 2))) <= {
        (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_mc_determinism_and_threads():
    spec = wo.SeedSpec(123, 4, 3000)
    a = wo.mc_unrestricted(40, spec)
    b = wo.mc_unrestricted(40, spec, threads=3)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    c = wo.mc_unrestricted(40, wo.SeedSpec(123, 5, 3000))
    assert not np.array_equal(a.mean, c.mean)
    assert a.to_csv() == b.to_csv()


def test_mc_closed_matches_exact_at_n5():
    exact = wo.enumerate_closed(10, (1, 2))
    st = wo.mc_closed(5, wo.SeedSpec(7, 0, 40_000), (1, 2))
    for i, k in enumerate((1, 2)):
        assert abs(st.mean[i] - exact.mean(k)) < 4 * st.stderr[i]


def test_mc_unrestricted_matches_exact_at_n6():
    exact = wo.enumerate_unrestricted(6, (1, 2))
    st = wo.mc_unrestricted(6, wo.SeedSpec(8, 0, 40_000), (1, 2))
    for i, k in enumerate((1, 2)):
        assert abs(st.mean[i] - exact.mean(k)) < 4 * st.stderr[i]


def test_mc_unbiased_over_repeated_trials():
    exact = wo.enumerate_unrestricted(5, (1,)).mean(1)
    inside = 0
    for stream in range(20):
        st = wo.mc_unrestricted(5, wo.SeedSpec(99, stream, 4000), (1,))
        inside += abs(st.mean[0] - exact) <= 4 * st.stderr[0]
    assert inside >= 19


def test_central_moments_two_routes():
    st = wo.mc_closed(8, wo.SeedSpec(3, 0, 5000))
    alt = wo.central_from_raw(st)
    for p in (2, 3, 4):
        np.testing.assert_allclose(st.central[p], alt[p], rtol=1e-10, atol=1e-10)
    assert st.central[2][0] == pytest.approx(
        centralize({frozenset(): 1.0, frozenset([0]): st.mean[0], frozenset([1]): st.mean[0],
                    frozenset([0, 1]): st.raw_powers[2][0]}, 2), rel=1e-10)


def test_seed_spec_validation():
    with pytest.raises(ValueError):
        wo.SeedSpec(-1)
    with pytest.raises(ValueError):
        wo.SeedSpec(2**64)
    with pytest.raises(ValueError):
        wo.mc_closed(0, wo.SeedSpec(1))


def test_csv_layout():
    st = wo.mc_unrestricted(10, wo.SeedSpec(1, 0, 100), (1, 2))
    lines = st.to_csv().strip().splitlines()
    assert lines[0] == "n,samples,k,mean,stderr,mu2,mu3,mu4"
    assert len(lines) == 3 and lines[1].startswith("10,100,1,")
