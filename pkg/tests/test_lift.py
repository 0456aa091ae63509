import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from randlift.errors import InvalidParams, ParseError
from randlift.graph import Graph, adjacency, complete_graph, cycle_graph, degrees, make_graph
from randlift.lift import (
    LiftSpec,
    Matching,
    cyclic_shift,
    flatten_index,
    format_lift_spec,
    identity_lift,
    iterated_lift,
    parse_lift_spec,
    permutation_matrix,
    read_lift_spec,
    realize,
    sample_cyclic_lift,
    sample_uniform_lift,
    stage_seed,
    unflatten_index,
    write_lift_spec,
)
from randlift.spectral import lift_adjacency

from oracles import binomial_halfwidth, lift_edges_bruteforce

TRIALS = 10_000


def test_k1_lift_is_identity(C5):
    spec = sample_uniform_lift(C5, 1, 99)
    assert all(m.sigma == (1,) for m in spec.matchings.values())
    assert realize(spec).graph == C5


def test_uniform_lift_deterministic(K3):
    assert sample_uniform_lift(K3, 6, 5) == sample_uniform_lift(K3, 6, 5)
    assert sample_uniform_lift(K3, 6, 5) != sample_uniform_lift(K3, 6, 6)


def test_uniform_k2_identity_frequency(K2):
    hits = sum(sample_uniform_lift(K2, 2, s).matchings[(1, 2)].sigma == (1, 2) for s in range(TRIALS))
    # 3-sigma binomial interval for p = 1/2: 0.5 +- 0.015
    assert abs(hits / TRIALS - 0.5) <= 0.015


def test_uniform_lift_hits_every_permutation(K2):
    seen = {sample_uniform_lift(K2, 3, s).matchings[(1, 2)].sigma for s in range(600)}
    assert seen == set(itertools.permutations((1, 2, 3)))


def test_edges_sampled_independently_of_order():
    # the matching of an edge depends only on (seed, i, j), not on the rest of the graph
    G1 = make_graph(4, [(1, 2), (3, 4)])
    G2 = make_graph(4, [(3, 4)])
    assert sample_uniform_lift(G1, 7, 3).matchings[(3, 4)] == sample_uniform_lift(G2, 7, 3).matchings[(3, 4)]


def test_cyclic_shift_zero_is_identity():
    assert cyclic_shift(3, 0).sigma == (1, 2, 3)
    assert cyclic_shift(4, 1).sigma == (2, 3, 4, 1)


def test_cyclic_support_has_k_elements(K2):
    seen = Counter(sample_cyclic_lift(K2, 5, s).matchings[(1, 2)].sigma for s in range(500))
    assert set(seen) == {cyclic_shift(5, s).sigma for s in range(5)}


@pytest.mark.parametrize("sampler", [sample_uniform_lift, sample_cyclic_lift])
def test_marginals_are_one_over_k(K2, sampler):
    k = 3
    counts = np.zeros((k, k))
    for s in range(TRIALS):
        sig = np.asarray(sampler(K2, k, s).matchings[(1, 2)].sigma) - 1
        counts[np.arange(k), sig] += 1
    half = binomial_halfwidth(1 / k, TRIALS)
    assert np.abs(counts / TRIALS - 1 / k).max() <= half


def test_cyclic_k2_matches_uniform_distribution(K2):
    hits = sum(sample_cyclic_lift(K2, 2, s).matchings[(1, 2)].sigma == (1, 2) for s in range(TRIALS))
    assert abs(hits / TRIALS - 0.5) <= 0.015


def test_realize_examples(K2, K3):
    assert realize(identity_lift(K2, 2)).graph.edges == ((1, 3), (2, 4))
    swap = LiftSpec(K2, 2, {(1, 2): Matching(2, (2, 1))})
    assert realize(swap).graph.edges == ((1, 4), (2, 3))
    two_triangles = realize(identity_lift(K3, 2)).graph
    # labels (i, l) -> 2(i-1) + l: copy 1 is {1, 3, 5}, copy 2 is {2, 4, 6}
    assert two_triangles.edges == ((1, 3), (1, 5), (2, 4), (2, 6), (3, 5), (4, 6))


def test_lifted_graph_labels():
    lg = realize(identity_lift(complete_graph(3), 4))
    assert lg.label(2, 3) == 7 and lg.unlabel(7) == (2, 3)
    assert all(lg.unlabel(lg.label(i, l)) == (i, l) for i in range(1, 4) for l in range(1, 5))


def test_permutation_matrix_examples():
    np.testing.assert_array_equal(permutation_matrix(Matching.identity(3)), np.eye(3))
    V = permutation_matrix(Matching(3, (2, 3, 1)))
    expected = np.zeros((3, 3))
    expected[0, 1] = expected[1, 2] = expected[2, 0] = 1
    np.testing.assert_array_equal(V, expected)
    np.testing.assert_array_equal(V.T @ V, np.eye(3))
    np.testing.assert_array_equal(permutation_matrix(Matching(3, (2, 3, 1)), "j-to-i"), V.T)
    with pytest.raises(InvalidParams):
        permutation_matrix(Matching.identity(2), "sideways")


@given(st.permutations(list(range(1, 8))))
def test_permutation_matrix_properties(perm):
    m = Matching(7, tuple(perm))
    V = permutation_matrix(m, "i-to-j")
    W = permutation_matrix(m, "j-to-i")
    assert np.array_equal(V @ W, np.eye(7))
    assert (V.sum(axis=0) == 1).all() and (V.sum(axis=1) == 1).all()
    np.testing.assert_array_equal(W, np.linalg.inv(V))


def test_matching_validation():
    with pytest.raises(InvalidParams):
        Matching(3, (1, 1, 2))
    with pytest.raises(InvalidParams):
        Matching(3, (1, 2))


def test_liftspec_validation(K3):
    with pytest.raises(InvalidParams):
        LiftSpec(K3, 2, {(1, 2): Matching.identity(2)})
    with pytest.raises(InvalidParams):
        LiftSpec(K3, 2, {e: Matching.identity(3) for e in K3.edges})
    with pytest.raises(InvalidParams):
        sample_uniform_lift(K3, 0, 1)


base_graphs = st.integers(1, 7).flatmap(
    lambda n: st.lists(st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda e: e[0] != e[1]),
                       max_size=15).map(lambda es: make_graph(n, es))
)


@given(base_graphs, st.integers(1, 6), st.integers(0, 2**64 - 1), st.sampled_from(["uniform", "cyclic"]))
def test_lift_invariants(G, k, seed, sampler):
    spec = (sample_uniform_lift if sampler == "uniform" else sample_cyclic_lift)(G, k, seed)
    lifted = realize(spec).graph
    assert lifted.n == G.n * k and lifted.m == k * G.m
    base_deg = degrees(G).per_vertex
    lifted_deg = degrees(lifted).per_vertex
    assert all(lifted_deg[(i - 1) * k + l - 1] == base_deg[i - 1]
               for i in range(1, G.n + 1) for l in range(1, k + 1))
    sigmas = [spec.matchings[e].sigma for e in G.edges]
    assert set(lifted.edges) == lift_edges_bruteforce(G.edges, k, sigmas)
    np.testing.assert_array_equal(lift_adjacency(spec), adjacency(lifted))


def test_flatten_index_examples():
    assert flatten_index((1, 1), (2, 3)) == 1
    assert flatten_index((2, 3), (2, 3)) == 6
    assert flatten_index((1, 2), (2, 3)) == 2
    with pytest.raises(InvalidParams):
        flatten_index((3, 1), (2, 3))
    with pytest.raises(InvalidParams):
        flatten_index((1,), (2, 3))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4))
def test_flatten_index_bijective(ks):
    labels = [flatten_index(t, ks) for t in itertools.product(*(range(1, k + 1) for k in ks))]
    assert sorted(labels) == list(range(1, int(np.prod(ks)) + 1))
    assert all(unflatten_index(flatten_index(t, ks), ks) == t
               for t in itertools.product(*(range(1, k + 1) for k in ks)))


def test_iterated_single_stage_is_uniform_lift(K3):
    lg, spec = iterated_lift(K3, [4], 12)
    assert spec == sample_uniform_lift(K3, 4, stage_seed(12, 1))
    assert lg.graph == realize(spec).graph


@pytest.mark.parametrize("ks", [[2, 2], [2, 3], [3, 2, 2]])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_iterated_matches_successive_lifts(ks, seed):
    G = complete_graph(4)
    lg, spec = iterated_lift(G, ks, seed)
    current = G
    for t, kt in enumerate(ks, start=1):
        current = realize(sample_uniform_lift(current, kt, stage_seed(seed, t))).graph
    assert lg.graph == current
    assert realize(spec).graph == current
    assert spec.k == lg.k == int(np.prod(ks))


def _two_stage_k2_support():
    """All composite permutations of [4] from stage choices (s1; t_a, t_b), by enumeration."""
    perms = set()
    S2 = [(1, 2), (2, 1)]
    for s1, ta, tb in itertools.product(S2, S2, S2):
        # stage-2 edge from copy a of vertex 1 goes to copy s1[a] of vertex 2
        tau = {1: ta, 2: tb}
        sigma = []
        for l1, l2 in itertools.product((1, 2), (1, 2)):
            r1 = s1[l1 - 1]
            r2 = tau[l1][l2 - 1]
            sigma.append(flatten_index((r1, r2), (2, 2)))
        perms.add(tuple(sigma))
    return perms


def test_iterated_support_is_small(K2):
    support = _two_stage_k2_support()
    assert len(support) == 8 < 24
    seen = {iterated_lift(K2, [2, 2], s)[1].matchings[(1, 2)].sigma for s in range(800)}
    assert seen == support


def test_iterated_marginals(K2):
    counts = np.zeros((4, 4))
    for s in range(TRIALS):
        sig = np.asarray(iterated_lift(K2, [2, 2], s)[1].matchings[(1, 2)].sigma) - 1
        counts[np.arange(4), sig] += 1
    assert np.abs(counts / TRIALS - 0.25).max() <= binomial_halfwidth(0.25, TRIALS)


def test_iterated_rejects_small_stage(K2):
    with pytest.raises(InvalidParams):
        iterated_lift(K2, [2, 1], 0)
    with pytest.raises(InvalidParams):
        iterated_lift(K2, [], 0)


@given(base_graphs, st.integers(1, 5), st.integers(0, 2**32))
def test_lift_spec_text_round_trip(G, k, seed):
    spec = sample_uniform_lift(G, k, seed)
    assert parse_lift_spec(format_lift_spec(spec)) == spec


def test_lift_spec_file(tmp_path, K3):
    spec = sample_uniform_lift(K3, 4, 1)
    write_lift_spec(spec, tmp_path / "x.lift")
    assert read_lift_spec(tmp_path / "x.lift") == spec
    first = (tmp_path / "x.lift").read_text().splitlines()[0]
    assert first == "3 4 3"


@pytest.mark.parametrize("text, match", [
    ("", "line 1"),
    ("2 2\n", "line 1"),
    ("2 2 1\n1 2 1\n", "line 2"),
    ("2 2 1\n1 2 1 1\n", "permutation"),
    ("2 2 1\n2 1 1 2\n", "line 2"),
    ("2 2 2\n1 2 1 2\n", "line 1"),
])
def test_lift_spec_parse_errors(text, match):
    with pytest.raises(ParseError, match=match):
        parse_lift_spec(text)
