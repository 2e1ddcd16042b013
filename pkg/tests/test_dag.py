import itertools
import json

import networkx as nx
import numpy as np
import pytest

from coordcert.dag import (
    CausalDag,
    Node,
    NodeKind,
    all_share_common_cause,
    all_share_quantum_common_cause,
    build_gstar,
    build_gstar_q,
    extend_to_gstar,
    gstar_edge_count,
    is_isomorphic,
    is_terminal,
    make_terminal,
    random_gn_member,
)
from coordcert.errors import DomainError, InvalidArityError, ValidationError

OC, OQ = NodeKind.OBSERVED_CLASSICAL, NodeKind.OBSERVED_QUANTUM
LC, LQ = NodeKind.LATENT_CLASSICAL, NodeKind.LATENT_QUANTUM


def observed(n, kind=OC):
    return [Node(i, kind, frozenset({i + 1})) for i in range(n)]


def brute_edge_count(n):
    count = 0
    for size in range(2, n):
        for s in itertools.combinations(range(n), size):
            count += sum(1 for t in itertools.combinations(s, size - 1))
    return count


@pytest.mark.parametrize("n, nodes, edges", [(3, 6, 6), (4, 14, 24), (5, 30, 70)])
def test_gstar_counts(n, nodes, edges):
    g = build_gstar(n)
    assert len(g) == nodes
    assert len(g.edges) == edges
    assert len(g.observed) == n


@pytest.mark.parametrize("n", range(3, 13))
def test_gstar_structure(n):
    g = build_gstar(n)
    assert len(g) == 2 ** n - 2
    assert len(g.edges) == brute_edge_count(n) == gstar_edge_count(n)
    assert nx.is_directed_acyclic_graph(g.to_networkx())
    for node in g.nodes:
        kids = {g.node(c).label for c in g.children(node.id)}
        expected = {node.label - {p} for p in node.label} if len(node.label) > 1 else set()
        assert kids == expected
        assert node.kind is (OC if len(node.label) == 1 else LQ)
    assert not all_share_common_cause(g)


def test_gstar_arity_guard():
    with pytest.raises(InvalidArityError):
        build_gstar(2)
    with pytest.raises(InvalidArityError):
        build_gstar_q(1)


@pytest.mark.parametrize("n, nodes, edges", [(3, 7, 9), (4, 15, 28)])
def test_gstar_q_counts(n, nodes, edges):
    g = build_gstar_q(n)
    assert (len(g), len(g.edges)) == (nodes, edges)
    assert all(g.node(i).kind is OQ for i in g.observed)


def test_gstar_q_parents_of_first_party():
    g = build_gstar_q(4)
    a1 = g.find(frozenset({1}))
    labels = {g.node(p).label for p in g.parents(a1)}
    assert labels == {frozenset({1, 2}), frozenset({1, 3}), frozenset({1, 4}), "lambda"}


@pytest.mark.parametrize("n", range(3, 9))
def test_quantum_common_cause_absent_but_classical_present(n):
    g = build_gstar_q(n)
    assert all_share_common_cause(g)
    assert not all_share_quantum_common_cause(g)


def test_shared_parent_is_common_cause():
    g = CausalDag(observed(2) + [Node(2, LC, "L")], [(2, 0), (2, 1)])
    assert all_share_common_cause(g)
    assert not all_share_quantum_common_cause(g)


def test_quantum_parent_over_gstar():
    base = build_gstar(4, observed_kind=OQ)
    top = len(base)
    g = CausalDag(list(base.nodes) + [Node(top, LQ, "top")], set(base.edges) | {(top, i) for i in base.observed})
    assert all_share_quantum_common_cause(g)


def test_isolated_observed_nodes_share_nothing():
    g = CausalDag(observed(3, OQ), [])
    assert not all_share_common_cause(g)
    assert not all_share_quantum_common_cause(g)


def test_observed_chain_is_a_common_cause():
    # A1 influences everyone through the chain
    g = CausalDag(observed(3), [(0, 1), (1, 2)])
    assert all_share_common_cause(g)


def test_validation_errors():
    with pytest.raises(ValidationError):
        CausalDag(observed(2), [(0, 5)])
    with pytest.raises(ValidationError):
        CausalDag(observed(2), [(0, 1), (1, 0)])
    with pytest.raises(ValidationError):
        CausalDag(observed(2) + [Node(0, LQ, "dup")], [])


def test_text_and_json_round_trip():
    g = build_gstar_q(4)
    assert CausalDag.from_text(g.to_text()) == g
    assert CausalDag.from_json(g.to_json()) == g
    assert g.to_text() == build_gstar_q(4).to_text()
    first = g.to_text().splitlines()[0]
    assert first == "node 0 observed-quantum {1}"
    data = json.loads(g.to_json())
    assert len(data["nodes"]) == 15 and len(data["edges"]) == 28


def test_from_text_rejects_garbage():
    with pytest.raises(ValidationError, match="line 2"):
        CausalDag.from_text("node 0 observed-classical {1}\nvertex 1\n")


def test_make_terminal_identity_on_terminal_input():
    g = build_gstar(4)
    out, w = make_terminal(g)
    assert out is g
    assert not w.added_nodes and not w.added_edges and not w.removed_edges


def test_make_terminal_removes_edge_under_shared_latent():
    g = CausalDag(observed(3) + [Node(3, LC, "L")], [(3, 0), (3, 1), (0, 1)])
    out, w = make_terminal(g)
    assert is_terminal(out)
    assert w.removed_edges == {(0, 1)}
    assert w.designated[(0, 1)] == 3
    assert {(3, 0), (3, 1)} <= out.edges
    assert w.surviving_edges_preserved()


def test_make_terminal_chain():
    nodes = observed(4) + [Node(4, LC, "L1"), Node(5, LC, "L2"), Node(6, LC, "L3")]
    edges = [(4, 0), (4, 1), (5, 1), (5, 2), (6, 2), (6, 3), (0, 1), (1, 2)]
    g = CausalDag(nodes, edges)
    out, w = make_terminal(g)
    assert is_terminal(out)
    assert nx.is_directed_acyclic_graph(out.to_networkx())
    assert w.removed_edges == {(0, 1), (1, 2)}
    # the latent simulating A1 -> A2 forwards to the one simulating A2 -> A3
    up, down = w.designated[(0, 1)], w.designated[(1, 2)]
    assert down in out.descendants(up)
    assert not all_share_common_cause(out)
    assert w.surviving_edges_preserved()


def test_make_terminal_rejects_global_common_cause():
    g = CausalDag(observed(3) + [Node(3, LQ, "L")], [(3, 0), (3, 1), (3, 2)])
    with pytest.raises(DomainError):
        make_terminal(g)


def test_extend_triangle_is_identity_up_to_labels():
    tri = build_gstar(3)
    m = extend_to_gstar(tri, 3)
    assert not m.added_nodes and not m.added_edges
    assert is_isomorphic(tri, m.target)


def test_extend_one_layer_tetrahedron():
    # four sources, each reaching three parties directly
    nodes = observed(4)
    edges = []
    for k, s in enumerate(itertools.combinations(range(4), 3)):
        nodes.append(Node(4 + k, LQ, f"S{k}"))
        edges += [(4 + k, i) for i in s]
    g = CausalDag(nodes, edges)
    m = extend_to_gstar(g, 4)
    added_labels = {m.target.node(i).label for i in m.added_nodes}
    assert added_labels == {frozenset(c) for c in itertools.combinations(range(1, 5), 2)}
    assert len(m.added_edges) == 24
    assert len(m.rerouted_edges) == 12
    assert m.surviving_edges_preserved()


def test_extend_rejects_full_reach_latent():
    g = CausalDag(observed(3) + [Node(3, LQ, "L")], [(3, 0), (3, 1), (3, 2)])
    with pytest.raises(DomainError):
        extend_to_gstar(g, 3)


def test_extend_requires_terminal():
    g = CausalDag(observed(4), [(0, 1)])
    with pytest.raises(DomainError):
        extend_to_gstar(g, 4)


def test_random_members_embed(rng):
    ref = build_gstar(4)
    for _ in range(100):
        g = random_gn_member(rng)
        assert not all_share_common_cause(g)
        t, w1 = make_terminal(g)
        assert is_terminal(t) and w1.surviving_edges_preserved()
        m = extend_to_gstar(t, 4)
        assert m.surviving_edges_preserved()
        assert is_isomorphic(m.target, ref)


def test_random_generator_exercises_observed_edges(rng):
    draws = [random_gn_member(rng) for _ in range(100)]
    assert sum(not is_terminal(g) for g in draws) > 20
