import numpy as np
import pytest

import hawksteer as hs


def test_adjacency_validation():
    with pytest.raises(ValueError):
        hs.Adjacency([[1, 0], [0, 0]])  # self-follow
    with pytest.raises(ValueError):
        hs.Adjacency([[0, 2], [0, 0]])  # non-binary


def test_influence_support_enforced():
    adj = hs.Adjacency([[0, 1], [0, 0]])  # user 1 follows user 0
    # events by 0 excite 1, so only B[1, 0] may be nonzero
    hs.Influence([[0.0, 0.0], [0.7, 0.0]], adj)
    with pytest.raises(hs.SupportError):
        hs.Influence([[0.0, 0.3], [0.0, 0.0]], adj)


def test_influence_support_fuzz():
    rng = hs.stream(1, "fuzz")
    for _ in range(50):
        n = int(rng.integers(2, 7))
        edges = (rng.random((n, n)) < 0.4).astype(int)
        np.fill_diagonal(edges, 0)
        adj = hs.Adjacency(edges)
        good = rng.uniform(0, 1, (n, n)) * adj.influence_mask()
        hs.Influence(good, adj)  # never raises
        forbidden = np.argwhere(~adj.influence_mask())
        if len(forbidden):
            bad = good.copy()
            u, v = forbidden[int(rng.integers(len(forbidden)))]
            bad[u, v] = 0.5
            with pytest.raises(hs.SupportError):
                hs.Influence(bad, adj)


def test_kronecker_all_ones_is_complete():
    adj = hs.kronecker_generate([[1, 1], [1, 1]], 3, hs.stream(2, "k"))
    expected = np.ones((8, 8), dtype=int) - np.eye(8, dtype=int)
    assert np.array_equal(adj.edges, expected)


def test_kronecker_all_zeros_is_empty():
    adj = hs.kronecker_generate([[0, 0], [0, 0]], 3, hs.stream(3, "k"))
    assert adj.edges.sum() == 0


def test_kronecker_probability_by_bit_product():
    """Oracle: enumerate the 64x64 probabilities from the bit-product
    definition directly and compare with the kron construction."""
    seed = np.array([[0.9, 0.5], [0.5, 0.3]])
    k = 6
    n = 2**k
    prob = hs.kronecker_probability(seed, k)
    oracle = np.ones((n, n))
    for i in range(n):
        for j in range(n):
            for level in range(k):
                bi = (i >> (k - 1 - level)) & 1
                bj = (j >> (k - 1 - level)) & 1
                oracle[i, j] *= seed[bi, bj]
    assert np.allclose(prob, oracle, rtol=1e-12)


def test_kronecker_edge_count_within_three_sigma():
    seed = [[0.9, 0.5], [0.5, 0.3]]
    prob = hs.kronecker_probability(seed, 6)
    p_offdiag = prob.copy()
    np.fill_diagonal(p_offdiag, 0.0)
    mean = p_offdiag.sum()
    var = (p_offdiag * (1 - p_offdiag)).sum()
    rng = hs.stream(4, "edges")
    counts = [hs.kronecker_generate(seed, 6, rng).edges.sum() for _ in range(200)]
    se = np.sqrt(var / len(counts))
    assert abs(np.mean(counts) - mean) < 3 * se


def test_kronecker_probability_permutation_equivariance():
    """Swapping the seed's labels permutes node labels by the bit flip."""
    seed = np.array([[0.9, 0.4], [0.2, 0.6]])
    k = 5
    n = 2**k
    swapped = seed[::-1, ::-1]
    p1 = hs.kronecker_probability(seed, k)
    p2 = hs.kronecker_probability(swapped, k)
    sigma = (~np.arange(n)) & (n - 1)  # flip every bit
    assert np.allclose(p2, p1[np.ix_(sigma, sigma)], rtol=1e-12)


def test_kronecker_deterministic_under_seed():
    a = hs.kronecker_generate([[0.9, 0.4], [0.4, 0.7]], 5, hs.stream(5, "det"))
    b = hs.kronecker_generate([[0.9, 0.4], [0.4, 0.7]], 5, hs.stream(5, "det"))
    assert np.array_equal(a.edges, b.edges)


def test_feed_projection():
    adj = hs.Adjacency(np.zeros((3, 3), dtype=int))
    assert np.array_equal(hs.feed_projection(adj, [1.0, 2.0, 3.0]), np.zeros(3))
    edges = np.zeros((3, 3), dtype=int)
    edges[0, 1] = 1  # user 1 follows user 0
    adj = hs.Adjacency(edges)
    feed = hs.feed_projection(adj, [3.0, 1.0, 1.0])
    assert feed[1] == 3.0 and feed[0] == 0.0


def test_feed_projection_matches_double_loop():
    rng = hs.stream(6, "fp")
    edges = (rng.random((5, 5)) < 0.5).astype(int)
    np.fill_diagonal(edges, 0)
    adj = hs.Adjacency(edges)
    lam = rng.uniform(0, 2, 5)
    feed = hs.feed_projection(adj, lam)
    naive = np.zeros(5)
    for j in range(5):
        for i in range(5):
            naive[j] += edges[i, j] * lam[i]
    assert np.allclose(feed, naive)


def test_pagerank_symmetric_two_cycle():
    adj = hs.Adjacency([[0, 1], [1, 0]])
    assert np.allclose(hs.pagerank(adj), [0.5, 0.5], atol=1e-12)


def test_pagerank_star_hub_dominates():
    n = 6
    edges = np.zeros((n, n), dtype=int)
    edges[0, 1:] = 1  # everyone follows the hub (node 0)
    adj = hs.Adjacency(edges)
    pr = hs.pagerank(adj)
    assert pr[0] == max(pr)
    assert pr[0] > 2 * pr[1]


def test_pagerank_matches_dense_eigenvector():
    rng = hs.stream(7, "pr")
    edges = (rng.random((6, 6)) < 0.5).astype(int)
    np.fill_diagonal(edges, 0)
    adj = hs.Adjacency(edges)
    d = 0.85
    pr = hs.pagerank(adj, damping=d)
    # dense linear-system oracle: pr = (1-d)/n + d * (W + dangling/n) pr
    A = adj.edges.astype(float)
    followees = A.sum(axis=0)
    W = np.where(followees > 0, A / np.where(followees == 0, 1, followees), 0.0)
    dang = (followees == 0).astype(float)
    M = d * (W + np.outer(np.ones(6) / 6, dang))
    oracle = np.linalg.solve(np.eye(6) - M, np.full(6, (1 - d) / 6))
    oracle /= oracle.sum()
    assert np.abs(pr - oracle).max() < 1e-8


def test_out_degree_is_follower_count():
    edges = np.array([[0, 1, 1], [0, 0, 0], [1, 0, 0]])
    adj = hs.Adjacency(edges)
    assert np.array_equal(hs.out_degree(adj), [2.0, 0.0, 1.0])
    assert np.array_equal(hs.centrality(adj, "out_degree"), [2.0, 0.0, 1.0])


def test_edge_list_round_trip(tmp_path):
    rng = hs.stream(8, "io")
    edges = (rng.random((5, 5)) < 0.5).astype(int)
    np.fill_diagonal(edges, 0)
    adj = hs.Adjacency(edges)
    infl = hs.random_influence(adj, 0.1, 2.0, rng)
    path = tmp_path / "graph.txt"
    hs.save_edges(path, adj, infl)
    adj2, infl2 = hs.load_edges(path)
    assert np.array_equal(adj.edges, adj2.edges)
    assert np.array_equal(infl.weights, infl2.weights)


def test_edge_list_rejects_bad_lines(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("0 0\n")
    with pytest.raises(ValueError):
        hs.load_edges(path)


def test_spectral_radius_power_iteration():
    rng = hs.stream(9, "rho")
    mat = rng.uniform(0, 1, (8, 8))
    rho = hs.spectral_radius(mat)
    oracle = max(abs(np.linalg.eigvals(mat)))
    assert rho == pytest.approx(oracle, rel=1e-6)
