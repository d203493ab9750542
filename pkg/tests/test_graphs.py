"""Graph core: generators, colourings, perturbation, basic predicates."""

import math

import numpy as np
import pytest

from rainbowtrees import (ColouredGraph, ParameterError, RandomSource,
                          complete_graph, external_neighbourhood, gen_gnp,
                          gen_seed_graph, is_rainbow, perturb,
                          uniform_colouring)

from oracles import naive_external_neighbourhood, naive_is_rainbow


def test_coloured_graph_validation():
    g = ColouredGraph(4, [(0, 1), (2, 1)])
    assert g.order == 4 and g.size == 2
    assert g.has_edge(1, 0) and g.has_edge(1, 2) and not g.has_edge(0, 2)
    with pytest.raises(ParameterError):
        ColouredGraph(3, [(0, 0)])
    with pytest.raises(ParameterError):
        ColouredGraph(3, [(0, 5)])
    with pytest.raises(ParameterError):
        ColouredGraph(3, [(0, 1)], {(0, 1): 3}, palette_size=3)
    with pytest.raises(ParameterError):
        ColouredGraph(3, [(0, 1), (1, 2)], {(0, 1): 0}, palette_size=2)


def test_gnp_trivial_endpoints():
    src = RandomSource(7)
    assert gen_gnp(5, 0.0, src).size == 0
    assert gen_gnp(5, 0.0, src).order == 5
    assert gen_gnp(5, 1.0, src).edges == complete_graph(5).edges


def test_gnp_edge_count_moments():
    # mean of Bin(19900, 1/2) over many trials; the z statistic of the
    # sample mean should sit well inside 3 sigma
    trials = 10 ** 4
    n, p = 200, 0.5
    total = n * (n - 1) // 2
    counts = np.array([gen_gnp(n, p, RandomSource(100, t)).size
                       for t in range(trials)])
    mu = total * p
    sigma = math.sqrt(total * p * (1 - p))
    z = (counts.mean() - mu) / (sigma / math.sqrt(trials))
    assert abs(z) < 3.0, "sample mean z=%.2f" % z


def test_gnp_sparse_path_matches_moments():
    # p < 0.1 exercises the geometric-skipping sampler
    trials = 400
    n, p = 300, 0.02
    total = n * (n - 1) // 2
    counts = np.array([gen_gnp(n, p, RandomSource(3, t)).size
                       for t in range(trials)])
    mu = total * p
    sigma = math.sqrt(total * p * (1 - p))
    z = (counts.mean() - mu) / (sigma / math.sqrt(trials))
    assert abs(z) < 3.5, "sparse sampler mean z=%.2f" % z
    # edges are valid and canonical
    g = gen_gnp(n, p, RandomSource(3, 0))
    for u, v in g.edges:
        assert 0 <= u < v < n


def test_gnp_pair_symmetry():
    # every pair should have the same marginal edge probability
    trials = 4000
    n, p = 6, 0.3
    hits = {}
    for t in range(trials):
        g = gen_gnp(n, p, RandomSource(11, t))
        for e in g.edges:
            hits[e] = hits.get(e, 0) + 1
    sigma = math.sqrt(trials * p * (1 - p))
    for u in range(n):
        for v in range(u + 1, n):
            got = hits.get((u, v), 0)
            assert abs(got - trials * p) < 4.5 * sigma, \
                "pair (%d,%d) hit %d times" % (u, v, got)


def test_gnp_reproducible():
    a = gen_gnp(50, 0.2, RandomSource(42, 5))
    b = gen_gnp(50, 0.2, RandomSource(42, 5))
    c = gen_gnp(50, 0.2, RandomSource(42, 6))
    assert a.edges == b.edges
    assert a.edges != c.edges


def test_gnp_bad_p():
    with pytest.raises(ParameterError):
        gen_gnp(5, -0.1, RandomSource(0))
    with pytest.raises(ParameterError):
        gen_gnp(5, 1.5, RandomSource(0))


def test_seed_graph_complete():
    g = gen_seed_graph(10, 0.5, "complete")
    assert g.edges == complete_graph(10).edges
    assert g.min_degree() == 9


def test_seed_graph_clique_union():
    g = gen_seed_graph(10, 0.3, "clique-union", parts=2)
    assert g.min_degree() == 4
    assert g.size == 2 * 10  # two K5s
    with pytest.raises(ParameterError):
        gen_seed_graph(10, 0.95, "clique-union", parts=2)
    # automatic part count finds a feasible split
    h = gen_seed_graph(10, 0.3, "clique-union")
    assert h.min_degree() >= 3


def test_seed_graph_multipartite():
    g = gen_seed_graph(10, 0.4, "multipartite")
    assert g.min_degree() >= 4
    # complete bipartite K_{5,5}
    assert g.size == 25


def test_seed_graph_random_supergraph():
    g = gen_seed_graph(60, 0.3, "random-supergraph", RandomSource(9))
    assert g.min_degree() >= math.ceil(0.3 * 60)
    h = gen_seed_graph(60, 0.3, "random-supergraph", RandomSource(9))
    assert g.edges == h.edges


def test_perturb_trivial():
    k4 = complete_graph(4)
    out = perturb(k4, 0.0, RandomSource(1))
    assert out.union.edges == k4.edges
    assert out.r_edges == frozenset()
    assert out.seed_minus_r().edges == k4.edges


def test_perturb_union_and_r_recovery():
    seed = gen_seed_graph(40, 0.3, "clique-union")
    for t in range(25):
        out = perturb(seed, 0.1, RandomSource(21, t))
        assert seed.edges <= out.union.edges
        assert out.union.edges == seed.edges | out.r_edges
        g_minus = out.seed_minus_r()
        assert g_minus.edges == seed.edges - out.r_edges
        assert not (g_minus.edges & out.r_edges)


def test_perturb_discards_colouring():
    seed = uniform_colouring(complete_graph(5), 7, RandomSource(2))
    out = perturb(seed, 0.5, RandomSource(3))
    assert not out.union.is_coloured


def test_uniform_colouring_trivial():
    g = complete_graph(4)
    c1 = uniform_colouring(g, 1, RandomSource(5))
    assert set(c1.colouring.values()) == {0}
    empty = uniform_colouring(ColouredGraph(3, []), 4, RandomSource(5))
    assert empty.colouring == {}


def test_uniform_colouring_chi_square():
    # per-edge colour frequencies over many trials pass a chi-square test
    from scipy.stats import chi2

    g = complete_graph(4)
    k = 3
    trials = 10 ** 5
    edges = sorted(g.edges)
    counts = {e: [0] * k for e in edges}
    for t in range(trials):
        col = uniform_colouring(g, k, RandomSource(13, t)).colouring
        for e in edges:
            counts[e][col[e]] += 1
    crit = chi2.ppf(0.99, df=k - 1)
    expected = trials / k
    for e in edges:
        stat = sum((c - expected) ** 2 / expected for c in counts[e])
        assert stat < crit, "edge %s chi2=%.2f >= %.2f" % (e, stat, crit)


def test_is_rainbow_examples():
    tri = ColouredGraph(3, [(0, 1), (1, 2), (0, 2)],
                        {(0, 1): 0, (1, 2): 1, (0, 2): 2}, palette_size=3)
    assert is_rainbow(tri)
    rep = ColouredGraph(3, [(0, 1), (1, 2), (0, 2)],
                        {(0, 1): 0, (1, 2): 0, (0, 2): 1}, palette_size=2)
    assert not is_rainbow(rep)
    assert is_rainbow(rep, [(0, 1)])
    assert is_rainbow(rep, [(0, 1), (0, 2)])
    assert not is_rainbow(rep, [(0, 1), (1, 2)])
    with pytest.raises(ParameterError):
        is_rainbow(tri, [(0, 9)])


def test_is_rainbow_matches_naive():
    for t in range(60):
        g = uniform_colouring(gen_gnp(10, 0.4, RandomSource(31, t)), 12,
                              RandomSource(32, t))
        if not g.edges:
            continue
        assert is_rainbow(g) == naive_is_rainbow(g)
        some = sorted(g.edges)[: max(1, g.size // 2)]
        assert is_rainbow(g, some) == naive_is_rainbow(g, some)


def test_external_neighbourhood_examples():
    k4 = complete_graph(4)
    assert external_neighbourhood(k4, {0}) == {1, 2, 3}
    path = ColouredGraph(3, [(0, 1), (1, 2)])
    assert external_neighbourhood(path, {1}) == {0, 2}
    assert external_neighbourhood(k4, set(range(4))) == frozenset()


def test_external_neighbourhood_matches_naive_and_monotone():
    gen = np.random.default_rng(77)
    for t in range(40):
        g = gen_gnp(12, 0.3, RandomSource(41, t))
        x = set(int(v) for v in gen.choice(12, size=4, replace=False))
        mine = external_neighbourhood(g, x)
        assert mine == naive_external_neighbourhood(g, x)
        assert not (mine & x)
        # monotone under edge addition
        u, v = int(gen.integers(0, 12)), int(gen.integers(0, 12))
        if u != v and not g.has_edge(u, v):
            bigger = ColouredGraph(12, set(g.edges) | {(min(u, v), max(u, v))})
            assert external_neighbourhood(bigger, x) >= mine


def test_subgraph_keeps_labels():
    g = uniform_colouring(complete_graph(6), 10, RandomSource(8))
    sub = g.subgraph({1, 3, 5})
    assert sub.order == 3
    assert sub.vertex_set == frozenset({1, 3, 5})
    for u, v in sub.edges:
        assert g.colour_of(u, v) == sub.colour_of(u, v)
    iso = g.subgraph({2})
    assert iso.order == 1 and iso.size == 0
