import itertools
import json
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from configint.errors import InvalidEdge, MixedVariant, ParseError, SizeLimit
from configint.graphs import (GraphSum, KnotGraph, LabeledGraph, canonical_key, cocycle_basis,
                              cocycle_from_json, cocycle_to_json, contract_edge,
                              contractible_indices, delta, enumerate_trivalent, is_connected,
                              is_prime, is_trivalent, order, relabel, relabelings,
                              validate_graph)

THETA = LabeledGraph(2, ((1, 2), (1, 2), (1, 2)))
K4 = LabeledGraph(4, ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)))
CHORDS_X = KnotGraph(4, 0, ((1, 3), (2, 4)))
TRIPOD_Y = KnotGraph(3, 1, ((1, 4), (2, 4), (3, 4)))


def brute_force_count(degrees):
    """Loop-free edge multisets with the given degree sequence, by exhaustive search."""
    n = len(degrees)
    m = sum(degrees) // 2
    pairs = list(itertools.combinations(range(n), 2))
    count = 0
    for multiset in itertools.combinations_with_replacement(pairs, m):
        deg = Counter()
        for a, b in multiset:
            deg[a] += 1
            deg[b] += 1
        if all(deg[v] == degrees[v] for v in range(n)):
            count += 1
    return count


@pytest.mark.parametrize("n", [2, 4, 6])
def test_closed_enumeration_matches_brute_force(n):
    graphs = enumerate_trivalent(n, "closed")
    assert len({canonical_key(g) for g in graphs}) == len(graphs)
    assert len(graphs) == brute_force_count([3] * n)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_knot_enumeration_matches_brute_force(n):
    graphs = enumerate_trivalent(n, "knot")
    expected = sum(brute_force_count([1] * (n - t) + [3] * t) for t in range(n)
                   if (n - t + 3 * t) % 2 == 0)
    assert len(graphs) == expected


def test_frozen_counts():
    assert [len(enumerate_trivalent(n, "closed")) for n in (2, 4, 6)] == [1, 10, 760]
    assert [len(enumerate_trivalent(n, "knot")) for n in (2, 4, 6)] == [1, 10, 416]


def test_odd_closed_has_no_trivalent_graphs():
    assert enumerate_trivalent(3, "closed") == []


def test_size_limit():
    with pytest.raises(SizeLimit):
        enumerate_trivalent(10, "closed")


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        LabeledGraph(2, ((1, 1), (1, 2)))


def test_edges_are_stored_low_to_high():
    g = LabeledGraph(2, ((2, 1), (1, 2), (2, 1)))
    assert g.edges == ((1, 2),) * 3


def test_validation_and_order():
    assert is_trivalent(THETA) and is_trivalent(K4)
    assert order(THETA) == 1 and order(K4) == 2
    assert order(TRIPOD_Y) == 2 and order(CHORDS_X) == 2
    rep = validate_graph(LabeledGraph(3, ((1, 2), (2, 3))))
    assert not rep.trivalent and rep.problems


def test_connectivity_and_primality():
    assert is_connected(THETA)
    two_thetas = LabeledGraph(4, ((1, 2),) * 3 + ((3, 4),) * 3)
    assert not is_connected(two_thetas)
    assert is_prime(CHORDS_X) and is_prime(TRIPOD_Y)
    parallel = KnotGraph(4, 0, ((1, 4), (2, 3)))
    assert not is_prime(parallel)


def test_theta_contracts_to_zero():
    for k in range(3):
        assert contract_edge(THETA, k).is_zero
    assert not delta(THETA)


def test_k4_contraction_by_hand():
    # merge 2 into 1, relabel 3 -> 2, 4 -> 3; no orientation flips; (-1)^2 = +1
    sg = contract_edge(K4, 0)
    assert sg.sign == 1
    assert sg.graph == LabeledGraph(3, ((1, 2), (1, 2), (1, 3), (1, 3), (2, 3)))


def test_contraction_orientation_flip():
    # contract (2,3) in a path 1-3, 2-3, 2-4: merge 3 into 2, 4 -> 3
    g = LabeledGraph(4, ((1, 3), (2, 3), (2, 4)))
    sg = contract_edge(g, 1)
    assert sg.sign == -1          # (-1)^3, no flips
    assert sg.graph.edges == ((1, 2), (2, 3))


def test_knot_chord_is_not_contractible():
    idx = len(CHORDS_X.loop_arcs())
    assert idx not in contractible_indices(CHORDS_X)
    with pytest.raises(InvalidEdge):
        contract_edge(CHORDS_X, idx)
    with pytest.raises(InvalidEdge):
        contract_edge(CHORDS_X, 99)


def test_closing_arc_carries_extra_sign():
    g = KnotGraph(3, 1, ((1, 4), (2, 4), (3, 4)))
    arcs = g.loop_arcs()
    assert arcs[-1] == (1, 3)
    sg = contract_edge(g, len(arcs) - 1)
    # merge 3 into 1: (-1)^3, times -1 for the closing arc, no flips
    assert sg.graph == KnotGraph(2, 1, ((1, 3), (1, 3), (2, 3)))
    assert sg.sign == 1


def test_theta_spans_closed_order_one():
    basis = cocycle_basis(2, "closed", "connected")
    assert len(basis) == 1
    assert basis[0] == GraphSum([(THETA, 1)], quotient=True)


def test_closed_quotient_dimensions():
    assert [len(cocycle_basis(n, "closed", "connected")) for n in (2, 4, 6)] == [1, 1, 1]


def test_closed_numbered_kernel_dimension():
    assert len(cocycle_basis(4, "closed", "connected", quotient=False)) == 5


def test_knot_order_two_prime_cocycle():
    basis = cocycle_basis(4, "knot", "prime")
    assert len(basis) == 1
    v = basis[0]
    assert not delta(v)
    coeffs = {canonical_key(g): c for g, c in v.items()}
    assert coeffs == {
        "K|2|2|(1,3),(2,4),(3,4)x2": Fraction(1),
        "K|3|1|(1,4),(2,4),(3,4)": Fraction(2, 3),
        "K|4|0|(1,3),(2,4)": Fraction(-1, 2),
    }


def test_graph_sum_arithmetic():
    a = GraphSum([(THETA, Fraction(1, 2))])
    b = GraphSum([(THETA, Fraction(1, 2))])
    assert (a + b).terms == {canonical_key(THETA): 1}
    assert not (a - b)
    with pytest.raises(MixedVariant):
        GraphSum([(THETA, 1), (CHORDS_X, 1)])


def test_cocycle_json_round_trip():
    v = cocycle_basis(4, "knot", "prime")[0]
    back = cocycle_from_json(cocycle_to_json(v))
    assert back == v and back.quotient
    with pytest.raises(ParseError):
        cocycle_from_json(json.dumps({"variant": "weird", "terms": []}))


# -- properties -------------------------------------------------------------

ALL_GRAPHS = (enumerate_trivalent(4, "closed") + enumerate_trivalent(6, "closed")[::7]
              + enumerate_trivalent(4, "knot") + enumerate_trivalent(6, "knot")[::3])


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(ALL_GRAPHS))
def test_delta_squared_vanishes(g):
    assert not delta(delta(g))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(ALL_GRAPHS), st.randoms(use_true_random=False))
def test_delta_commutes_with_relabeling(g, rnd):
    perms = list(relabelings(g.variant, g.n_ext, g.n_total))
    perm, psign = rnd.choice(perms)
    esign, h = relabel(g, perm)
    lhs = delta(GraphSum([(g, 1)], quotient=True))
    rhs = delta(GraphSum([(h, psign * esign)], quotient=True))
    assert lhs == rhs


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(ALL_GRAPHS))
def test_quotient_class_is_relabeling_invariant(g):
    base = GraphSum([(g, 1)], quotient=True)
    for perm, psign in itertools.islice(relabelings(g.variant, g.n_ext, g.n_total), 12):
        esign, h = relabel(g, perm)
        assert GraphSum([(h, psign * esign)], quotient=True) == base
