import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmosync.graph import (
    DirectedGraph,
    GraphError,
    SpectrumError,
    build_laplacian,
    format_graph,
    is_strongly_connected,
    parse_graph,
    read_graph,
    spectral_decomposition,
    standin_graph,
)
from oracles import random_strong_digraph, reachability


def cycle(n, weights=None):
    w = weights if weights is not None else [1.0] * n
    # node i receives from node i-1
    return DirectedGraph(n, tuple((i, (i - 1) % n, w[i]) for i in range(n)))


def undirected(n, pairs):
    edges = []
    for i, j in pairs:
        edges += [(i, j, 1.0), (j, i, 1.0)]
    return DirectedGraph(n, tuple(edges))


def test_laplacian_rows_sum_to_zero_and_diagonal_is_in_degree():
    g = DirectedGraph(3, ((0, 1, 2.0), (0, 2, 0.5), (1, 0, 1.0), (2, 1, 3.0)))
    L = build_laplacian(g)
    assert np.array_equal(L.sum(axis=1), np.zeros(3))
    assert np.allclose(np.diag(L), [2.5, 1.0, 3.0])
    assert L[0, 1] == -2.0 and L[2, 1] == -3.0


@pytest.mark.parametrize(
    "edges, msg",
    [
        (((0, 0, 1.0),), "self-loop"),
        (((0, 1, 1.0), (0, 1, 2.0)), "duplicate"),
        (((0, 1, 0.0),), "nonpositive"),
        (((0, 1, -1.0),), "nonpositive"),
        (((0, 1, float("nan")),), "nonpositive"),
        (((0, 5, 1.0),), "outside"),
    ],
)
def test_invalid_edges_rejected(edges, msg):
    with pytest.raises(GraphError, match=msg):
        DirectedGraph(3, edges)


def test_strong_connectivity_small_cases():
    assert is_strongly_connected(cycle(4))
    path = DirectedGraph(3, ((1, 0, 1.0), (2, 1, 1.0)))
    assert not is_strongly_connected(path)
    assert is_strongly_connected(DirectedGraph(1))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.floats(0.0, 0.6), st.integers(0, 2**31 - 1))
def test_strong_connectivity_matches_reachability_oracle(n, density, seed):
    rng = np.random.default_rng(seed)
    A = (rng.random((n, n)) < density).astype(float)
    np.fill_diagonal(A, 0.0)
    g = DirectedGraph.from_adjacency(A)
    assert is_strongly_connected(g) == bool(reachability(A).all())


def test_cycle_left_null_vector_is_inverse_weight():
    # for a weighted directed cycle, xi_i is proportional to 1/w_i
    w = [1.0, 2.0, 4.0, 0.5]
    sp = spectral_decomposition(build_laplacian(cycle(4, w)))
    expect = 1.0 / np.array(w)
    assert np.allclose(sp.xi, expect / expect.sum(), atol=1e-13)


def test_undirected_graph_has_uniform_xi_and_real_spectrum():
    g = undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    sp = spectral_decomposition(build_laplacian(g))
    assert np.allclose(sp.xi, 0.25)
    assert np.allclose(np.sort(sp.lambdas.real), [2.0, 2.0, 4.0])
    assert np.allclose(sp.lambdas.imag, 0.0, atol=1e-12)


def check_basis(L, sp):
    n = L.shape[0]
    one = np.ones(n)
    assert abs(sp.xi.sum() - 1) < 1e-12 and np.all(sp.xi > 0)
    assert np.abs(sp.xi @ L).max() < 1e-12 * max(1.0, np.abs(L).max())
    assert np.allclose(sp.P_dag @ sp.P_hat, np.eye(n - 1), atol=1e-11)
    assert np.abs(sp.P_dag @ one).max() < 1e-11
    assert np.abs(sp.xi @ sp.P_hat).max() < 1e-11
    assert np.allclose(sp.P_hat @ sp.P_dag + np.outer(one, sp.xi), np.eye(n), atol=1e-11)
    T = sp.P_dag @ L @ sp.P_hat
    assert np.allclose(T, sp.T, atol=1e-10)
    assert np.abs(np.tril(T, -1)).max() < 1e-10
    # eigenvalues agree with a dense eigensolve of L (minus the zero)
    ev = np.linalg.eigvals(L)
    ev = ev[np.argsort(np.abs(ev))][1:]
    for lam in sp.lambdas:
        assert np.min(np.abs(ev - lam)) < 1e-7


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 20), st.integers(0, 2**31 - 1))
def test_spectral_basis_properties_random(n, extra, seed):
    A = random_strong_digraph(np.random.default_rng(seed), n, extra)
    L = build_laplacian(DirectedGraph.from_adjacency(A))
    check_basis(L, spectral_decomposition(L))


def test_eigenvalue_order_is_real_part_then_imaginary():
    sp = spectral_decomposition(build_laplacian(standin_graph()))
    re = np.round(sp.lambdas.real, 8)
    assert np.all(np.diff(re) >= 0)


def test_not_strongly_connected_rejected():
    path = DirectedGraph(3, ((1, 0, 1.0), (2, 1, 1.0)))
    with pytest.raises(SpectrumError):
        spectral_decomposition(build_laplacian(path))
    two_islands = undirected(4, [(0, 1), (2, 3)])
    with pytest.raises(SpectrumError, match="multiplicity"):
        spectral_decomposition(build_laplacian(two_islands))
    with pytest.raises(SpectrumError):
        spectral_decomposition(np.zeros((1, 1)))


def test_parse_and_format_round_trip():
    text = "# comment\nn 4\n1 2 1.0\n2 3 0.25\n3 4 2\n4 1 1.5\n"
    g = parse_graph(text)
    assert g.n == 4 and (1, 2, 0.25) in g.edges
    assert parse_graph(format_graph(g)) == g


@pytest.mark.parametrize("text", ["1 2\n", "0 1 1.0\n", "1 2 x\n", "n\n"])
def test_parse_errors(text):
    with pytest.raises(GraphError):
        parse_graph(text)


def test_standin_graph_shape():
    g = standin_graph()
    assert g.n == 10 and len(g.edges) == 37
    assert all(w == 1.0 for _, _, w in g.edges)
    assert is_strongly_connected(g)
    L = build_laplacian(g)
    assert np.trace(L) == 37.0
    assert read_graph("standin") == g


def test_read_graph_from_file(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("1 2 1\n2 1 1\n")
    assert read_graph(p).n == 2
