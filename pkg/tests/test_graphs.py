import math
from itertools import combinations

import numpy as np
import pytest

from skrl import graphs
from skrl.errors import DomainError, InvalidArgumentError, ResourceLimitError
from skrl.graphs import GraphClass, LabeledGraph as G


def all_subsets(n):
    pairs = list(combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        yield G(n, [pairs[k] for k in range(len(pairs)) if mask >> k & 1])


def triangle(a, b, c, n=6):
    return G(n, [(a, b), (b, c), (a, c)])


def test_classify_examples():
    assert graphs.classify(G(4)) is GraphClass.SIMPLE_CLOSED
    assert graphs.classify(triangle(0, 1, 2)) is GraphClass.CYCLE
    assert graphs.classify(G(4, [(0, 1), (1, 2)])) is GraphClass.SELF_AVOIDING_PATH
    assert graphs.classify(G(4, [(0, 1), (0, 2), (0, 3)])) is GraphClass.SIMPLE
    bowtie = G(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    assert graphs.classify(bowtie) is GraphClass.SIMPLE_CLOSED


def test_canonical_form():
    assert G(4, [(2, 1), (0, 3)]) == G(4, [(0, 3), (1, 2)])
    assert hash(G(4, [(2, 1)])) == hash(G(4, [(1, 2)]))
    with pytest.raises(InvalidArgumentError):
        G(3, [(1, 1)])
    assert str(G(3, [(0, 1)])) == "{1-2}"


@pytest.mark.parametrize("n", [3, 4, 5])
def test_closed_graphs_match_subset_filter(n):
    expected = {g for g in all_subsets(n) if graphs.is_closed(g)}
    got = list(graphs.enumerate_closed_graphs(n))
    assert len(got) == len(set(got)) == len(expected)
    assert set(got) == expected
    assert got[0] == G(n)


def test_closed_graph_examples():
    assert len(list(graphs.enumerate_closed_graphs(3))) == 2
    assert len(list(graphs.enumerate_closed_graphs(4))) == 8
    small = list(graphs.enumerate_closed_graphs(4, max_edges=3))
    assert len(small) == 5 and G(4) in small


@pytest.mark.parametrize("n", range(3, 9))
def test_closed_graph_counts(n):
    assert graphs.count_closed_graphs(n) == 2 ** (math.comb(n, 2) - n + 1)


def test_closed_graph_cap():
    with pytest.raises(ResourceLimitError):
        graphs.closed_graph_masks(9)


def test_cycle_examples():
    assert list(graphs.enumerate_cycles(2, max_len=3)) == []
    assert len(list(graphs.enumerate_cycles(4, max_len=4))) == 7
    assert len(list(graphs.enumerate_cycles(4, required_edge=(0, 1), max_len=4))) == 4


@pytest.mark.parametrize("n", [4, 5, 6])
def test_cycle_counts_match_brute_force(n):
    brute = {g for g in all_subsets(n) if graphs.classify(g) is GraphClass.CYCLE}
    got = list(graphs.enumerate_cycles(n))
    assert set(got) == brute and len(got) == len(brute)
    for k in range(3, n + 1):
        assert sum(len(c) == k for c in got) == graphs.cycle_count(n, k)


def test_sap_examples():
    paths = list(graphs.enumerate_saps(0, 1, 3, 2))
    assert set(paths) == {G(3, [(0, 1)]), G(3, [(0, 2), (1, 2)])}
    assert list(graphs.enumerate_saps(2, 4, 6, 1)) == [G(6, [(2, 4)])]
    five = list(graphs.enumerate_saps(0, 1, 5, 3))
    assert sum(len(p) == 3 for p in five) == 6 == graphs.sap_count(5, 3)
    with pytest.raises(InvalidArgumentError):
        list(graphs.enumerate_saps(1, 1, 4, 2))


@pytest.mark.parametrize("n", [4, 5, 6])
def test_sap_counts_match_brute_force(n):
    brute = set()
    for g in all_subsets(n):
        if graphs.classify(g) is GraphClass.SELF_AVOIDING_PATH:
            ends = [v for v, d in g.degrees().items() if d == 1]
            if sorted(ends) == [0, 2]:
                brute.add(g)
    got = list(graphs.enumerate_saps(0, 2, n, n - 1))
    assert set(got) == brute and len(got) == len(brute)
    for k in range(1, n):
        assert sum(len(p) == k for p in got) == graphs.sap_count(n, k)


def test_veblen_examples():
    assert graphs.veblen_decompose(triangle(0, 1, 2)) == [triangle(0, 1, 2)]
    assert graphs.veblen_decompose(G(5)) == []
    bowtie = G(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    parts = graphs.veblen_decompose(bowtie)
    assert sorted(parts, key=lambda g: g.edges) == [triangle(0, 1, 2, 5), triangle(2, 3, 4, 5)]
    with pytest.raises(InvalidArgumentError):
        graphs.veblen_decompose(G(3, [(0, 1)]))


def check_veblen(gamma):
    parts = graphs.veblen_decompose(gamma)
    acc = set()
    for part in parts:
        assert graphs.classify(part) is GraphClass.CYCLE
        assert not acc & set(part.edges)
        acc ^= set(part.edges)
    return acc == set(gamma.edges)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_veblen_round_trip(n):
    assert all(check_veblen(g) for g in graphs.enumerate_closed_graphs(n))


def test_phi_examples():
    t = triangle(0, 1, 2)
    assert graphs.phi_compose(t, G(6)) == t
    disjoint = graphs.phi_compose(t, triangle(3, 4, 5))
    assert len(disjoint) == 6 and graphs.is_closed(disjoint)
    shared = graphs.phi_compose(t, triangle(2, 3, 4))
    assert len(shared) == 6 and shared.degrees()[2] == 4
    with pytest.raises(DomainError):
        graphs.phi_compose(t, G(6, [(0, 1), (1, 3), (0, 3)]))
    with pytest.raises(DomainError):
        graphs.phi_compose(G(6, [(0, 1)]), G(6))


def brute_injectivity(i, j, n):
    images = {}
    closed = list(graphs.enumerate_closed_graphs(n))
    for gamma in graphs.enumerate_cycles(n, required_edge=(i, j)):
        for tau in closed:
            if len(gamma.vertices & tau.vertices) <= 1:
                key = graphs.phi_compose(gamma, tau)
                images.setdefault(key, []).append((gamma, tau))
    return all(len(v) == 1 for v in images.values()), sum(len(v) for v in images.values())


@pytest.mark.parametrize("n", [4, 5])
def test_phi_injectivity_matches_object_scan(n):
    ok, bad = graphs.check_phi_injectivity(0, 1, n)
    brute_ok, size = brute_injectivity(0, 1, n)
    assert ok and brute_ok and bad == []
    assert len(graphs.phi_image_pairs(0, 1, n)[0]) == size


@pytest.mark.parametrize("n", [4, 5, 6])
def test_phi_injectivity(n):
    assert graphs.check_phi_injectivity(0, 1, n)[0]
    assert graphs.check_phi_injectivity(1, n - 1, n)[0]


def test_psi_examples():
    t = triangle(0, 1, 2)
    s = graphs.psi_split(t, triangle(3, 4, 5))
    assert s.psi1 == G(6, t.edges + triangle(3, 4, 5).edges) and s.psi2 == G(6)
    s = graphs.psi_split(t, t)
    assert s.psi1 == G(6) and s.psi2 == t


def figure_one():
    names = "ijklmnpqrstuvw"
    v = {c: k for k, c in enumerate(names)}
    cyc = "ijklmnqp"
    gamma = G(14, [(v[a], v[b]) for a, b in zip(cyc, cyc[1:] + cyc[0])])
    tau = G(14, [(v[a], v[b]) for a, b in ["lm", "mn", "lr", "rs", "ms", "mt", "st",
                                            "su", "tu", "nv", "vw", "tw"]])
    return gamma, tau, v


def test_psi_figure_one():
    gamma, tau, v = figure_one()
    assert graphs.classify(gamma) is GraphClass.CYCLE and graphs.is_closed(tau)
    s = graphs.psi_split(gamma, tau)
    assert s.psi2 == G(14, [(v["l"], v["m"]), (v["m"], v["n"])])
    assert graphs.is_closed(s.psi1)
    assert graphs.split_into_paths(s.psi2, s.psi1.vertices)


def test_psi_preimage_examples():
    t = triangle(0, 1, 2, 5)
    assert graphs.psi_preimage(G(5), t, 5) == [(t, t)]
    assert graphs.psi_preimage(G(5), G(5, [(0, 1), (1, 2)]), 5) == []
    # two triangles sharing {0,1}: either one can play gamma
    eta1 = G(4, [(0, 2), (1, 2), (0, 3), (1, 3)])
    pre = graphs.psi_preimage(eta1, G(4, [(0, 1)]), 4)
    assert len(pre) >= 2
    assert {(a, b) for a, b in pre} >= {(triangle(0, 1, 2, 4), triangle(0, 1, 3, 4)),
                                         (triangle(0, 1, 3, 4), triangle(0, 1, 2, 4))}


def test_psi_preimage_matches_object_scan():
    n = 4
    eta1 = G(n, [(0, 2), (1, 2), (0, 3), (1, 3)])
    eta2 = G(n, [(0, 1)])
    brute = []
    for gamma in graphs.enumerate_cycles(n):
        for tau in graphs.enumerate_closed_graphs(n):
            s = graphs.psi_split(gamma, tau)
            if s.psi1 == eta1 and s.psi2 == eta2:
                brute.append((gamma, tau))
    assert sorted(graphs.psi_preimage(eta1, eta2, n), key=str) == sorted(brute, key=str)
    assert len(brute) <= graphs.preimage_bound(eta1)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_psi_structure(n):
    assert graphs.psi_structure_violations(n) == []


@pytest.mark.parametrize("n", [4, 5, 6])
def test_preimage_bound(n):
    holds, rows = graphs.preimage_bound_scan(n)
    assert holds and rows


def test_count_a_kl_examples():
    assert graphs.count_a_kl(5, 3, 0) == 10
    assert graphs.count_a_kl(7, 3, 4) == 0
    assert graphs.count_a_kl(4, 4, 0) == 3


def test_count_a_kl_brute_force():
    n = 5
    closed = [g for g in all_subsets(n) if graphs.is_closed(g)]
    for k in range(3, 6):
        for l in range(0, 6):
            brute = sum(len(g.vertices) == k and len(g) == k + l for g in closed)
            assert graphs.count_a_kl(n, k, l) == brute


def parts_at_least_three(k):
    # partitions of k with every part >= 3
    def count(rest, smallest):
        if rest == 0:
            return 1
        return sum(count(rest - p, p) for p in range(smallest, rest + 1))
    return count(k, 3)


def partition_number(m):
    table = [1] + [0] * m
    for part in range(1, m + 1):
        for s in range(part, m + 1):
            table[s] += table[s - part]
    return table[m]


@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_unlabeled_counts(k):
    # unions of vertex-disjoint cycles covering k vertices
    assert graphs.unlabeled_a_kl(k, 0) == parts_at_least_three(k)
    for l in range(0, 3):
        assert graphs.unlabeled_a_kl(k, l) <= partition_number(k + l) * (k + l) ** (2 * l)


def test_t_set_examples():
    n = 5
    # i = 0 outside eta1
    eta1 = triangle(1, 2, 3, n)
    members = graphs.build_t_set(eta1, 0, 1, n, cutoff=100)
    assert members and all((0, 1) in m for m in members)
    small = graphs.build_t_set(eta1, 0, 1, n, cutoff=4)
    assert small <= members


def brute_t_set(eta1, i, j, n, cutoff):
    out = set()
    for gamma in graphs.enumerate_cycles(n, required_edge=(i, j)):
        if not len(gamma) < cutoff:
            continue
        for tau in graphs.enumerate_closed_graphs(n):
            if len(gamma.vertices & tau.vertices) >= 2:
                s = graphs.psi_split(gamma, tau)
                if s.psi1 == eta1:
                    out.add(s.psi2)
    return out


@pytest.mark.parametrize("cutoff", [3, 4, 100])
def test_t_set_matches_object_scan(cutoff):
    n = 5
    eta1 = G(n, [(0, 1), (1, 2), (0, 2)])
    assert graphs.build_t_set(eta1, 0, 1, n, cutoff) == brute_t_set(eta1, 0, 1, n, cutoff)


def test_t_set_monotone_in_cutoff():
    n = 6
    for eta1 in [G(n), triangle(0, 1, 2), triangle(2, 3, 4)]:
        assert graphs.build_t_set(eta1, 0, 1, n, 3) <= graphs.build_t_set(eta1, 0, 1, n, math.inf)


def test_scan_cap():
    with pytest.raises(ResourceLimitError):
        graphs.check_phi_injectivity(0, 1, 7)
