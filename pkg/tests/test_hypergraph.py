import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyperfaith.hypergraph import (
    ChainDescriptor,
    Hypergraph,
    ascending_class,
    chain_descriptor,
    descending_class,
    has_running_intersection,
    is_decomposable,
    normalize_generating_class,
    power_set,
)


def sets(*labels, vertices="ABCD"):
    return {frozenset(vertices.index(c) for c in s) for s in labels}


def H(*edges, vertices="ABCD"):
    return Hypergraph.from_labels(edges, vertices)


@pytest.mark.parametrize(
    "given_sets,expected",
    [(["AB", "A", "BC"], "[AB][BC]"), (["ABC"], "[ABC]"), (["A", "B", "C"], "[A][B][C]")],
)
def test_normalize_generating_class(given_sets, expected):
    assert str(normalize_generating_class(given_sets)) == expected


def test_normalize_rejects_empty():
    with pytest.raises(ValueError):
        normalize_generating_class([])
    with pytest.raises(ValueError):
        normalize_generating_class([""], "AB")


def test_hypergraph_validation():
    with pytest.raises(ValueError, match="incomparable"):
        H("AB", "A")
    with pytest.raises(ValueError, match="out of range"):
        Hypergraph(("A", "B"), (frozenset({2}),))
    with pytest.raises(ValueError, match="duplicate"):
        Hypergraph(("A", "A"), (frozenset({0}),))
    with pytest.raises(ValueError, match="nonempty"):
        Hypergraph(("A", "B"), (frozenset(),))


def test_canonical_edge_order_and_json():
    h = H("CD", "ABD", "ABC")
    assert str(h) == "[CD][ABC][ABD]"
    assert h.edge_labels() == [["C", "D"], ["A", "B", "C"], ["A", "B", "D"]]
    assert Hypergraph.from_json(h.to_json()) == h
    assert h.orders() == [1, 2, 2]


def test_ascending_class_examples():
    assert ascending_class(H("ABC", "ABD")) == sets("CD", "ACD", "BCD", "ABCD")
    assert ascending_class(Hypergraph.saturated(4)) == set()
    single = ascending_class(Hypergraph.independence(4))
    assert single == {s for s in power_set(4) if len(s) >= 2}


edge_lists = st.integers(1, 6).flatmap(
    lambda k: st.tuples(
        st.just(k),
        st.lists(st.sets(st.integers(0, k - 1), min_size=1), min_size=1, max_size=5),
    )
)


@given(edge_lists)
def test_classes_partition_power_set(ke):
    k, edges = ke
    h = normalize_generating_class(edges, k)
    d, a = descending_class(h), ascending_class(h)
    assert d | a == set(power_set(k))
    assert not d & a
    assert len(d) + len(a) == 2**k
    # the hyperedges are the maximal elements of the descending class
    assert set(h.hyperedges) == {s for s in d if s and not any(s < t for t in d)}


@given(edge_lists)
def test_antichain(ke):
    k, edges = ke
    h = normalize_generating_class(edges, k)
    for a, b in itertools.permutations(h.hyperedges, 2):
        assert not a <= b


def brute_decomposable(edges):
    return any(has_running_intersection(p) for p in itertools.permutations(edges))


def test_decomposability_examples():
    dec = is_decomposable(H("AB", "BC", "CD"))
    assert dec.decomposable
    assert dec.ordering == tuple(H("AB", "BC", "CD").hyperedges)
    assert not is_decomposable(H("AB", "AC", "BC", vertices="ABC")).decomposable
    assert is_decomposable(H("ABC", vertices="ABC")).decomposable
    assert not is_decomposable(H("AB", "BC", "CD", "AD")).decomposable


@given(edge_lists, st.data())
def test_decomposability_against_brute_force(ke, data):
    k, edges = ke
    h = normalize_generating_class(edges, k)
    dec = is_decomposable(h)
    assert dec.decomposable == brute_decomposable(h.hyperedges)
    if dec.decomposable:
        assert has_running_intersection(dec.ordering)
        assert sorted(dec.ordering, key=sorted) == sorted(h.hyperedges, key=sorted)
    perm = data.draw(st.permutations(range(k)))
    relabeled = normalize_generating_class([[perm[v] for v in e] for e in h.hyperedges], k)
    assert is_decomposable(relabeled).decomposable == dec.decomposable


def test_chain_descriptor_examples():
    assert chain_descriptor(H("AB", "BC", "CD", "DE", vertices="ABCDE")) == ChainDescriptor(1, 4)
    assert chain_descriptor(H("ABC", "ABD")) == ChainDescriptor(2, 2)
    assert chain_descriptor(H("AB", "AC", "BC", vertices="ABC")) is None
    # isolated vertex D: not a chain
    assert chain_descriptor(H("AB", "BC")) is None
    assert chain_descriptor(H("AB", "C", vertices="ABC")) is None
