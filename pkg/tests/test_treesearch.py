import numpy as np
import pytest

from lastseq import treesearch
from oracles import brute_force_closest, qr_positive, random_full_rank


def test_closest_point_matches_brute_force_small_dims():
    rng = np.random.default_rng(11)
    for _ in range(400):
        m = int(rng.integers(1, 6))
        basis = random_full_rank(rng, m)
        _, r = qr_positive(basis)
        y = r @ rng.integers(-4, 5, size=m) + 0.4 * rng.standard_normal(m)
        z = treesearch.closest_point(r, y)
        assert np.array_equal(np.asarray(z), brute_force_closest(r, y))


def test_dfs_agrees_with_stack_search():
    rng = np.random.default_rng(12)
    for _ in range(400):
        m = int(rng.integers(1, 7))
        _, r = qr_positive(random_full_rank(rng, m))
        y = 3.0 * rng.standard_normal(m)
        z_stack = treesearch.closest_point(r, y)
        z_dfs, dist = treesearch.dfs_closest_point(r, y)
        assert np.array_equal(np.asarray(z_dfs), np.asarray(z_stack))
        resid = y - r @ np.asarray(z_dfs, dtype=float)
        assert dist == pytest.approx(resid @ resid, rel=1e-9, abs=1e-12)


def test_sibling_candidates_nondecreasing_distance():
    # Schnorr-Euchner ordering against a full sort of a candidate window
    for c in (0.0, 0.2, -0.37, 0.5, 1.49, -3.2):
        base = int(np.floor(c + 0.5))
        step = 1 if c >= base else -1
        cands = [treesearch._sibling_candidate(base, step, t) for t in range(9)]
        dists = [abs(c - v) for v in cands]
        assert dists == sorted(dists)
        window = sorted(range(base - 4, base + 5), key=lambda v: abs(c - v))
        # same multiset ordering up to ties at half-integers
        assert sorted(cands) == sorted(window)


def test_stack_search_noiseless_visits_one_node_per_level():
    rng = np.random.default_rng(13)
    _, r = qr_positive(random_full_rank(rng, 6))
    z_true = rng.integers(-3, 4, size=6)
    res = treesearch.stack_search(r, r @ z_true, bias=0.0)
    assert res["found"] and np.array_equal(res["z"], z_true)
    assert res["total"] == 6
    assert all(res["counts"][k] == 1 for k in range(1, 7))


def test_stack_search_node_limit_is_exact_cap():
    rng = np.random.default_rng(14)
    _, r = qr_positive(random_full_rank(rng, 6))
    y = r @ rng.integers(-3, 4, size=6) + 1.5 * rng.standard_normal(6)
    full = treesearch.stack_search(r, y, bias=0.0)
    assert full["found"]
    if full["total"] > 7:
        capped = treesearch.stack_search(r, y, bias=0.0, node_limit=7)
        assert not capped["found"]
        assert capped["total"] == 7


def test_stack_overflow_raises():
    rng = np.random.default_rng(15)
    _, r = qr_positive(random_full_rank(rng, 8))
    y = r @ rng.integers(-3, 4, size=8) + 2.0 * rng.standard_normal(8)
    with pytest.raises(treesearch.StackOverflow):
        treesearch.stack_search(r, y, bias=0.0, max_stack=4)


def test_trace_rows_match_counts():
    rng = np.random.default_rng(16)
    _, r = qr_positive(random_full_rank(rng, 5))
    y = r @ rng.integers(-2, 3, size=5) + 0.8 * rng.standard_normal(5)
    trace = []
    res = treesearch.stack_search(r, y, bias=0.3, trace=trace)
    assert len(trace) == res["total"]
    assert [row[2] for row in trace] == list(range(1, res["total"] + 1))
    per_level = [0] * 6
    for depth, _, _ in trace:
        per_level[depth] += 1
    assert per_level == res["counts"]


def test_path_metrics_consistent_with_final_distance():
    rng = np.random.default_rng(17)
    _, r = qr_positive(random_full_rank(rng, 6))
    y = 2.0 * rng.standard_normal(6)
    res = treesearch.stack_search(r, y, bias=0.4)
    mus = treesearch.path_metrics(r, y, res["z"], bias=0.4)
    assert mus[-1] == pytest.approx(0.4 * 6 - res["dist"], rel=1e-9, abs=1e-9)


def test_sphere_enumerate_counts_candidates():
    _, r = qr_positive(np.eye(2))
    points, examined = treesearch.sphere_enumerate(r, np.zeros(2), 1.0 + 1e-9)
    got = {tuple(p) for p in points}
    assert got == {(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)}
    assert examined >= len(points)


def test_sphere_enumerate_cap():
    _, r = qr_positive(np.eye(3))
    with pytest.raises(treesearch.ListSizeExceeded):
        treesearch.sphere_enumerate(r, np.zeros(3), 1e6, cap=10)


def test_babai_matches_greedy_rounding():
    rng = np.random.default_rng(18)
    _, r = qr_positive(random_full_rank(rng, 5))
    y = 2.0 * rng.standard_normal(5)
    z, dist, counts = treesearch.babai_nearest(r, y)
    assert sum(counts) == 5 and all(c == 1 for c in counts[1:])
    zz = np.zeros(5)
    for i in range(4, -1, -1):
        resid = y[i] - r[i, i + 1:] @ zz[i + 1:]
        zz[i] = np.floor(resid / r[i, i] + 0.5)
    assert np.array_equal(np.asarray(z, dtype=float), zz)
