from __future__ import annotations

import math

import numpy as np
import pytest

from specround.errors import EmptySparsifier, GraphError
from specround.graph import Graph
from specround.kernels import available_backends
from specround.sparsify import WIDTH_LIMIT, greedy_additive_sparsify, verify_additive


@pytest.fixture(scope="module")
def k16():
    G = Graph.complete(16)
    return G, greedy_additive_sparsify(G, 0.6, 0.1)


def test_small_graph_returned_whole():
    # K_4 has m = 6 < 2 n / eps^2 = 8.
    G = Graph.complete(4)
    cert = greedy_additive_sparsify(G, 1.0)
    assert cert.edges == tuple(range(6))
    assert cert.iterations == 0


def test_edge_count_and_distinctness(k16):
    G, cert = k16
    assert cert.m_tilde == math.ceil(16 / 0.6**2)
    assert len(set(cert.edges)) == cert.m_tilde
    assert cert.scale == pytest.approx(G.m / cert.m_tilde)


def test_per_iteration_bounds(k16):
    _, cert = k16
    assert len(cert.selection_scores) == cert.iterations
    assert min(cert.selection_scores) >= cert.selection_threshold - 1e-9
    assert max(cert.widths) <= WIDTH_LIMIT
    assert max(cert.block_offdiag) <= 1e-9


def test_certificate_matches_independent_verifier(k16):
    G, cert = k16
    rep = verify_additive(G, cert.edges, cert.eps)
    assert rep.upper / rep.d == pytest.approx(cert.upper_residual, abs=1e-10)
    assert rep.lower_shifted / rep.d == pytest.approx(cert.lower_residual, abs=1e-10)
    assert rep.eps_two_sided == pytest.approx(max(cert.upper_residual, -cert.lower_residual, 0))


def test_first_pick_is_lowest_index_on_symmetric_graph(k16):
    _, cert = k16
    assert cert.edges[0] == 0


@pytest.mark.skipif(len(available_backends()) < 2, reason="extension not built")
def test_backends_select_same_edges():
    G = Graph.complete(12)
    a = greedy_additive_sparsify(G, 0.7, backend="compiled")
    b = greedy_additive_sparsify(G, 0.7, backend="python")
    assert a.edges == b.edges


def test_full_edge_set_verifies_exactly():
    G = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    rep = verify_additive(G, range(5), 0.1)
    assert rep.eps_additive == pytest.approx(0.0, abs=1e-12)
    assert rep.eps_two_sided == pytest.approx(0.0, abs=1e-12)
    assert rep.passes_additive and rep.passes_two_sided


def test_single_edge_residuals_by_hand():
    # Path 0-1-2 sparsified to edge 0 with scale 2: residual L = 2 L_01 - L_G.
    G = Graph.from_edges(3, [(0, 1), (1, 2)])
    rep = verify_additive(G, [0], 1.0)
    L01 = np.array([[1, -1, 0], [-1, 1, 0], [0, 0, 0]], dtype=float)
    LG = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    w = np.linalg.eigvalsh(2 * L01 - LG)
    assert rep.upper == pytest.approx(w[-1])
    assert rep.lower == pytest.approx(w[0])
    assert rep.d == 2


def test_verifier_rejects_bad_sets():
    G = Graph.complete(4)
    with pytest.raises(EmptySparsifier):
        verify_additive(G, [], 0.5)
    with pytest.raises(GraphError):
        verify_additive(G, [0, 0], 0.5)
    with pytest.raises(GraphError):
        verify_additive(G, [99], 0.5)


def test_parameter_validation():
    G = Graph.complete(4)
    with pytest.raises(ValueError):
        greedy_additive_sparsify(G, 1.5)
    with pytest.raises(ValueError):
        greedy_additive_sparsify(G, 0.5, q=0.0)
    with pytest.raises(GraphError):
        greedy_additive_sparsify(Graph.from_edges(3, []), 0.5)
