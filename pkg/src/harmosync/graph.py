"""Directed communication graphs, Laplacians and their spectral objects.

Edges are stored as ``(i, j, a_ij)`` with 0-based node indices: oscillator
``i`` receives information from oscillator ``j`` with weight ``a_ij > 0``.
Graph files use the same triple but with 1-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "GraphError",
    "SpectrumError",
    "DirectedGraph",
    "LaplacianSpectrum",
    "build_laplacian",
    "is_strongly_connected",
    "spectral_decomposition",
    "read_graph",
    "parse_graph",
    "format_graph",
    "standin_graph",
]

XI_MIN = 1e-12


class GraphError(ValueError):
    """Invalid graph description (self-loop, duplicate edge, bad weight)."""


class SpectrumError(ValueError):
    """Laplacian spectrum does not have the structure of a strongly connected graph."""


@dataclass(frozen=True)
class DirectedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise GraphError(f"node count must be a positive integer, got {self.n!r}")
        edges = tuple((int(i), int(j), float(w)) for i, j, w in self.edges)
        seen = set()
        for i, j, w in edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) references a node outside 0..{self.n - 1}")
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if (i, j) in seen:
                raise GraphError(f"duplicate edge ({i}, {j})")
            if not (w > 0.0) or not np.isfinite(w):
                raise GraphError(f"edge ({i}, {j}) has nonpositive or non-finite weight {w}")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, A) -> "DirectedGraph":
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError("adjacency matrix must be square")
        if np.any(np.diag(A) != 0):
            raise GraphError("adjacency matrix has nonzero diagonal (self-loop)")
        if np.any(A < 0):
            raise GraphError("adjacency matrix has negative entries")
        idx = np.argwhere(A > 0)
        return cls(A.shape[0], tuple((int(i), int(j), float(A[i, j])) for i, j in idx))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            A[i, j] = w
        return A


def build_laplacian(g: DirectedGraph) -> np.ndarray:
    """Laplacian ``L = D - A`` with ``l_ii`` the (weighted) in-degree of node ``i``.

    The diagonal is set to minus the sum of the stored off-diagonal row so
    that each row sums to zero in the same summation order.
    """
    L = -g.adjacency()
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def is_strongly_connected(g: DirectedGraph) -> bool:
    if g.n == 1:
        return True
    A = csr_matrix(g.adjacency())
    ncomp, _ = connected_components(A, directed=True, connection="strong")
    return ncomp == 1


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Left null vector and a reduced triangularizing basis of a Laplacian.

    ``P_hat`` (n x n-1) and ``P_dag`` (n-1 x n) satisfy ``P_dag @ P_hat = I``,
    ``P_dag @ ones = 0``, ``xi @ P_hat = 0`` and ``P_dag @ L @ P_hat = T``
    with ``T`` upper triangular, diagonal ``lambdas``.  Together with
    ``ones`` and ``xi`` they form a full change of basis ``P = [1, P_hat]``,
    ``inv(P) = [xi; P_dag]``.
    """

    xi: np.ndarray
    lambdas: np.ndarray
    P_hat: np.ndarray
    P_dag: np.ndarray
    T: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    @property
    def xi_bar(self) -> float:
        return float(self.xi.max())


def _sort_key(lams: np.ndarray) -> np.ndarray:
    # Lexicographic (Re, Im) order, treating real parts equal within rounding
    # so that conjugate pairs stay adjacent with +Im last.
    scale = max(1.0, float(np.abs(lams).max(initial=0.0)))
    re = np.round(lams.real / scale, 9)
    return np.lexsort((lams.imag, re))


def _ordered_schur(Mr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    T, Z = sla.schur(Mr.astype(complex), output="complex")
    m = T.shape[0]
    target = np.diag(T)[_sort_key(np.diag(T))]
    for p in range(m):
        d = np.diag(T)[p:]
        j = p + int(np.argmin(np.abs(d - target[p])))
        if j != p:
            T, Z, info = lapack.ztrexc(T, Z, j + 1, p + 1)
            if info != 0:
                raise SpectrumError(f"Schur reordering failed (ztrexc info={info})")
    return np.triu(T), Z


def spectral_decomposition(L: np.ndarray) -> LaplacianSpectrum:
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    if n < 2:
        raise SpectrumError("spectral decomposition needs at least two nodes")
    ns = sla.null_space(L.T, rcond=1e-10 * max(1.0, np.abs(L).max()) / n)
    if ns.shape[1] != 1:
        raise SpectrumError(
            f"zero eigenvalue has geometric multiplicity {ns.shape[1]}; graph is not strongly connected"
        )
    xi = ns[:, 0] / ns[:, 0].sum()
    if np.any(xi <= XI_MIN):
        raise SpectrumError("left null vector has a nonpositive component; graph is not strongly connected")

    # xi-orthogonal complement is L-invariant because range(L) is orthogonal to xi.
    Q = sla.null_space(xi[None, :])
    T, Z = _ordered_schur(Q.T @ L @ Q)
    lambdas = np.diag(T).copy()
    if np.any(lambdas.real <= 0):
        raise SpectrumError("a nonzero Laplacian eigenvalue has nonpositive real part")
    P_hat = Q @ Z
    P_dag = Z.conj().T @ (Q.T - np.outer(Q.T.sum(axis=1), xi))
    return LaplacianSpectrum(xi=xi, lambdas=lambdas, P_hat=P_hat, P_dag=P_dag, T=T)


def parse_graph(text: str) -> DirectedGraph:
    """Parse the edge-list format: ``i j a_ij`` per line, 1-based ids.

    ``#`` starts a comment line; an optional ``n <count>`` line fixes the
    node count, otherwise it is the largest id seen.
    """
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "n":
            if len(parts) != 2:
                raise GraphError(f"line {lineno}: expected 'n <count>'")
            n = int(parts[1])
            continue
        if len(parts) != 3:
            raise GraphError(f"line {lineno}: expected 'i j a_ij', got {line!r}")
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError as exc:
            raise GraphError(f"line {lineno}: {exc}") from None
        if i < 1 or j < 1:
            raise GraphError(f"line {lineno}: node ids are 1-based")
        edges.append((i - 1, j - 1, w))
    if n is None:
        n = max((max(i, j) + 1 for i, j, _ in edges), default=0)
    return DirectedGraph(n, tuple(edges))


def format_graph(g: DirectedGraph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{i + 1} {j + 1} {w!r}" for i, j, w in g.edges]
    return "\n".join(lines) + "\n"


def read_graph(path) -> DirectedGraph:
    if str(path) in ("standin", "builtin:standin"):
        return standin_graph()
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def standin_graph() -> DirectedGraph:
    """The 10-node unit-weight digraph shipped for network-scale runs."""
    text = resources.files("harmosync").joinpath("data/standin_graph.txt").read_text(encoding="utf-8")
    return parse_graph(text)
