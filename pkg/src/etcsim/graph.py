"""Undirected communication topologies.

Adjacency/Laplacian construction, connectivity queries, vertex-cut checks,
and Laplacian spectra for networks of agents indexed 1..n. Graphs are
unweighted and have no self-loops; all operations here are pure functions
of immutable inputs and safe for concurrent use.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Relative threshold under which a Laplacian eigenvalue counts as zero.
ZERO_EIGENVALUE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted topology on agents 1..n_agents."""

    n_agents: int
    edges: frozenset
    adjacency: np.ndarray = field(repr=False)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def degree(self, i: int) -> int:
        _check_index(self.n_agents, i)
        return int(round(float(self.adjacency[i - 1].sum())))

    def neighbors(self, i: int) -> tuple:
        """1-based indices of the agents adjacent to agent i."""
        _check_index(self.n_agents, i)
        return tuple(int(j) + 1 for j in np.flatnonzero(self.adjacency[i - 1]))


def _check_index(n: int, i) -> None:
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)):
        raise ValueError(f"agent index must be an integer, got {i!r}")
    if not 1 <= i <= n:
        raise ValueError(f"agent index {i} outside 1..{n}")


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Build a Graph from 1-based index pairs.

    Duplicate edges collapse; self-loops and out-of-range indices are
    rejected.
    """
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"agent count must be a positive integer, got {n!r}")
    n = int(n)
    canonical = set()
    for pair in edges:
        try:
            i, j = pair
        except (TypeError, ValueError):
            raise ValueError(f"edge {pair!r} is not an index pair") from None
        _check_index(n, i)
        _check_index(n, j)
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) not allowed")
        canonical.add((min(int(i), int(j)), max(int(i), int(j))))
    adjacency = np.zeros((n, n))
    for i, j in canonical:
        adjacency[i - 1, j - 1] = 1.0
        adjacency[j - 1, i - 1] = 1.0
    adjacency.setflags(write=False)
    return Graph(n, frozenset(canonical), adjacency)


def laplacian(g: Graph) -> np.ndarray:
    """Degree matrix minus adjacency. Symmetric, rows sum exactly to zero."""
    return np.diag(g.degrees) - g.adjacency


def components_after_removal(g: Graph, removed: Iterable[int]) -> list:
    """Connected components of the graph after deleting the given agents.

    Returns a list of sets of the remaining 1-based indices, ordered by
    smallest member. Removing every agent is an error.
    """
    removed_set = set()
    for i in removed:
        _check_index(g.n_agents, i)
        removed_set.add(int(i))
    if len(removed_set) >= g.n_agents:
        raise ValueError("cannot remove every agent from the graph")
    components = []
    seen: set = set()
    for start in range(1, g.n_agents + 1):
        if start in removed_set or start in seen:
            continue
        component = {start}
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in g.neighbors(v):
                if w not in removed_set and w not in component:
                    component.add(w)
                    queue.append(w)
        seen |= component
        components.append(component)
    return components


def is_connected(g: Graph) -> bool:
    """True iff every agent is reachable from agent 1."""
    return len(components_after_removal(g, ())) == 1


def is_vertex_cut(g: Graph, candidate: Iterable[int]) -> bool:
    """True iff removing the candidate set disconnects a connected graph.

    The candidate must be a nonempty proper subset of the agents and the
    graph must be connected to begin with.
    """
    candidate_set = {int(i) for i in candidate}
    if not candidate_set:
        raise ValueError("candidate vertex cut must be nonempty")
    if len(candidate_set) >= g.n_agents:
        raise ValueError("candidate vertex cut must be a proper subset of the agents")
    if not is_connected(g):
        raise ValueError("vertex-cut check requires a connected graph")
    return len(components_after_removal(g, candidate_set)) >= 2


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Real Laplacian eigenvalues sorted ascending, with zero multiplicity."""

    eigenvalues: tuple
    multiplicity_of_zero: int

    @property
    def nonzero(self) -> tuple:
        """Eigenvalues above the zero threshold, ascending."""
        return self.eigenvalues[self.multiplicity_of_zero:]


def laplacian_eigenvalues(g: Graph) -> LaplacianSpectrum:
    """Eigenvalues of the (symmetric, positive semidefinite) Laplacian."""
    values = np.linalg.eigvalsh(laplacian(g))
    return _spectrum_from_values(values)


def laplacian_eigenpairs(g: Graph):
    """Spectrum plus the orthonormal eigenvector matrix (columns)."""
    values, vectors = np.linalg.eigh(laplacian(g))
    return _spectrum_from_values(values), vectors


def _spectrum_from_values(values: np.ndarray) -> LaplacianSpectrum:
    tol = ZERO_EIGENVALUE_RTOL * max(1.0, float(values[-1]))
    multiplicity = int(np.count_nonzero(np.abs(values) < tol))
    return LaplacianSpectrum(tuple(float(v) for v in values), multiplicity)
