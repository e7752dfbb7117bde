from __future__ import annotations

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specround.errors import Disconnected, GraphError, GraphFormatError, InvalidCut
from specround.graph import (
    Graph,
    adjacency,
    algebraic_connectivity,
    components,
    cut_edges,
    cut_weight,
    degree_matrix,
    effective_resistance,
    format_edge_list,
    is_connected,
    laplacian,
    parse_edge_list,
    read_edge_list,
    resistance_matrix,
    signless_laplacian,
    write_edge_list,
)


def _nx(G: Graph) -> nx.Graph:
    H = nx.Graph()
    H.add_nodes_from(range(G.n))
    for (a, b), w in zip(G.edges(), G.weight):
        if H.has_edge(a, b):
            H[a][b]["weight"] += w
        else:
            H.add_edge(a, b, weight=w)
    return H


def test_complete_graph_resistance_closed_form():
    G = Graph.complete(6)
    assert effective_resistance(G, 0, 3) == pytest.approx(2.0 / 6.0)
    assert algebraic_connectivity(G) == pytest.approx(6.0)


def test_series_path_resistance():
    G = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)], weights=[1.0, 2.0, 4.0])
    assert effective_resistance(G, 0, 3) == pytest.approx(1.0 + 0.5 + 0.25)


def test_parallel_edges_add_conductance():
    G = Graph.from_edges(2, [(0, 1), (0, 1)], weights=[1.0, 3.0])
    assert effective_resistance(G, 0, 1) == pytest.approx(0.25)
    assert G.max_degree() == 2


def test_laplacian_family_identities():
    G = Graph.from_edges(4, [(0, 1), (1, 2), (2, 0), (2, 3)], weights=[1.0, 2.0, 0.5, 3.0])
    L, Q = laplacian(G), signless_laplacian(G)
    D, A = degree_matrix(G), adjacency(G)
    np.testing.assert_allclose(L, D - A)
    np.testing.assert_allclose(Q, D + A)
    np.testing.assert_allclose(L @ np.ones(4), 0.0, atol=1e-14)
    B = G.incidence()
    np.testing.assert_allclose(B.T @ np.diag(G.weight) @ B, L)
    np.testing.assert_allclose(laplacian(G, use_weights=False), nx.laplacian_matrix(
        nx.Graph(G.edges()), nodelist=range(4)).toarray())


def test_disconnected_resistance_raises():
    G = Graph.from_edges(4, [(0, 1), (2, 3)])
    assert not is_connected(G)
    assert sorted(np.unique(components(G)).tolist()) == [0, 1]
    with pytest.raises(Disconnected):
        effective_resistance(G, 0, 3)
    assert effective_resistance(G, 2, 3) == pytest.approx(1.0)
    assert algebraic_connectivity(G) == pytest.approx(0.0, abs=1e-12)


def test_zero_weight_edges_do_not_connect():
    G = Graph.from_edges(3, [(0, 1), (1, 2)], weights=[1.0, 0.0])
    assert not is_connected(G)
    assert G.m == 2


def test_cuts():
    G = Graph.complete(4)
    assert cut_weight(G, [0]) == pytest.approx(3.0)
    assert cut_edges(G, [0, 1]).sum() == 4
    with pytest.raises(InvalidCut):
        cut_weight(G, [])
    with pytest.raises(InvalidCut):
        cut_weight(G, [0, 1, 2, 3])


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 2)])
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 1)], weights=[-1.0])


def test_edge_list_round_trip(tmp_path):
    G = Graph.from_edges(3, [(0, 1), (1, 2)], weights=[0.5, 0.25], costs=[2.0, 3.0])
    path = tmp_path / "g.el"
    write_edge_list(G, path)
    H = read_edge_list(path)
    assert H.edges() == G.edges()
    np.testing.assert_array_equal(H.weight, G.weight)
    np.testing.assert_array_equal(H.cost, G.cost)
    assert format_edge_list(H) == format_edge_list(G)


def test_edge_list_comments_and_blank_lines():
    text = "# demo\n3 1\n\n0 2 1.5 2  # edge\n"
    G = parse_edge_list(text)
    assert G.edges() == [(0, 2)]


@pytest.mark.parametrize(
    "text,line",
    [
        ("3\n", 1),
        ("3 1\n0 1 1\n", 2),
        ("3 1\n0 x 1 1\n", 2),
        ("3 2\n0 1 1 1\n1 5 1 1\n", 3),
        ("3 1\n1 1 1 1\n", 2),
        ("3 1\n0 1 -1 1\n", 2),
        ("3 2\n0 1 1 1\n", 2),
        ("3 1\n0 1 1 1\n1 2 1 1\n", 3),
    ],
)
def test_edge_list_errors_cite_line(text, line):
    with pytest.raises(GraphFormatError) as exc:
        parse_edge_list(text)
    assert exc.value.lineno == line
    assert str(exc.value).startswith(f"line {line}:")


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(2, 7))
    edges = [(i, draw(st.integers(0, i - 1))) for i in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=8))
    edges += [(a, b) for a, b in extra if a != b]
    weights = draw(st.lists(st.floats(0.1, 5.0), min_size=len(edges), max_size=len(edges)))
    return Graph.from_edges(n, edges, weights=weights)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_resistance_agrees_with_networkx(G):
    H = _nx(G)
    R = resistance_matrix(G)
    for s in range(G.n):
        for t in range(s + 1, G.n):
            ref = nx.resistance_distance(H, s, t, weight="weight", invert_weight=False)
            assert R[s, t] == pytest.approx(ref, rel=1e-8)
            assert effective_resistance(G, s, t) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_foster_theorem_and_connectivity(G):
    # Sum of w_e Reff(e) over all edges equals n - 1 for connected graphs.
    total = sum(w * effective_resistance(G, a, b) for (a, b), w in zip(G.edges(), G.weight))
    assert total == pytest.approx(G.n - 1, rel=1e-8)
    ref = nx.algebraic_connectivity(_nx(G), weight="weight", method="tracemin_lu", tol=1e-12)
    assert algebraic_connectivity(G) == pytest.approx(ref, rel=1e-6)
