"""Edge, vee and triangle densities and three-node subgraph frequencies.

Densities are averages over all node pairs (edges) or node triples (vees,
triangles). Counts are accumulated as 64-bit integers and divided once at the
end, so the sparse fast path and the literal triple-sum oracles agree exactly.
"""

from dataclasses import dataclass
from itertools import combinations
import logging
from math import comb

import numpy as np
from scipy import sparse

from eznet.core.errors import DomainError
from eznet.core.graph_io import Graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubgraphDensities:
    """Empirical edge, vee and triangle densities of a graph."""

    e_hat: float
    """Fraction of node pairs joined by an edge."""

    v_hat: float
    """Average over triples of the fraction of the three possible vees present."""

    t_hat: float
    """Fraction of node triples forming a triangle."""

    n: int
    """Number of nodes."""

    edge_count: int = 0
    vee_count: int = 0
    """Two-paths counted once per centre node, i.e. sum of C(d_i, 2)."""
    triangle_count: int = 0

    @classmethod
    def from_counts(cls, n: int, edge_count: int, vee_count: int, triangle_count: int) -> "SubgraphDensities":
        """Divide raw counts by their pair and triple denominators."""
        _require_triples(n)
        pairs = comb(n, 2)
        triples = comb(n, 3)
        return cls(
            e_hat=edge_count / pairs,
            v_hat=vee_count / (3 * triples),
            t_hat=triangle_count / triples,
            n=n,
            edge_count=int(edge_count),
            vee_count=int(vee_count),
            triangle_count=int(triangle_count),
        )


@dataclass(frozen=True)
class ThreeNodeFrequencies:
    """Relative frequencies of node triples spanning 0, 1, 2 or 3 edges."""

    f0: float
    f1: float
    f2: float
    f3: float
    p_hat: float
    """Edge density, the plug-in estimate of the Erdős–Rényi edge probability."""


def _require_triples(n: int):
    if n < 3:
        raise DomainError(f"three-node statistics undefined for n={n} < 3")


def triangle_count(graph: Graph) -> int:
    """Number of triangles, from upper-triangular sparse products.

    With U the strictly upper adjacency, (U @ U)[i, l] counts paths i < j < l and
    masking by U[i, l] closes each triangle exactly once.
    """
    if graph.num_edges == 0:
        return 0
    upper = sparse.triu(graph.adjacency, k=1, format="csr")
    return int((upper @ upper).multiply(upper).sum())


def vee_count(graph: Graph) -> int:
    degrees = graph.degrees
    return int(np.sum(degrees * (degrees - 1) // 2))


def densities(graph: Graph) -> SubgraphDensities:
    """Edge, vee and triangle densities computed from degrees and sparse products.

    Raises:
        DomainError: If the graph has fewer than three nodes.
    """
    _require_triples(graph.n)
    result = SubgraphDensities.from_counts(graph.n, graph.num_edges, vee_count(graph), triangle_count(graph))
    logger.debug(
        "n=%s edges=%s vees=%s triangles=%s", graph.n, result.edge_count, result.vee_count, result.triangle_count
    )
    return result


def densities_oracle(graph: Graph) -> SubgraphDensities:
    """Literal pair and triple sums. O(n^3); intended for small reference graphs."""
    _require_triples(graph.n)
    adj = graph.adjacency.toarray()
    edge_sum = sum(int(adj[i, j]) for i, j in combinations(range(graph.n), 2))
    vee_sum = 0
    triangle_sum = 0
    for i, j, l in combinations(range(graph.n), 3):
        a_ij, a_jl, a_il = int(adj[i, j]), int(adj[j, l]), int(adj[i, l])
        vee_sum += a_ij * a_jl + a_ij * a_il + a_il * a_jl
        triangle_sum += a_ij * a_jl * a_il
    return SubgraphDensities.from_counts(graph.n, edge_sum, vee_sum, triangle_sum)


def three_node_frequencies(graph: Graph) -> ThreeNodeFrequencies:
    """Frequencies of triples with 0..3 edges, derived from edge, vee and triangle counts.

    A triangle contains three vees, so S - 3t triples carry exactly two edges.
    Every edge lies in n - 2 triples, which fixes the one-edge count; the
    empty-triple count is the remainder.
    """
    d = densities(graph)
    return frequencies_from_densities(d)


def frequencies_from_densities(d: SubgraphDensities) -> ThreeNodeFrequencies:
    triples = comb(d.n, 3)
    count3 = d.triangle_count
    count2 = d.vee_count - 3 * d.triangle_count
    count1 = d.edge_count * (d.n - 2) - 2 * count2 - 3 * count3
    count0 = triples - count1 - count2 - count3
    return ThreeNodeFrequencies(
        f0=count0 / triples,
        f1=count1 / triples,
        f2=count2 / triples,
        f3=count3 / triples,
        p_hat=d.e_hat,
    )


def three_node_frequencies_oracle(graph: Graph) -> ThreeNodeFrequencies:
    """Classify every node triple by its edge count. O(n^3) reference."""
    _require_triples(graph.n)
    adj = graph.adjacency.toarray()
    counts = [0, 0, 0, 0]
    for i, j, l in combinations(range(graph.n), 3):
        counts[int(adj[i, j] + adj[j, l] + adj[i, l])] += 1
    triples = comb(graph.n, 3)
    edges = sum(int(adj[i, j]) for i, j in combinations(range(graph.n), 2))
    f0, f1, f2, f3 = (c / triples for c in counts)
    return ThreeNodeFrequencies(f0=f0, f1=f1, f2=f2, f3=f3, p_hat=edges / comb(graph.n, 2))


def ez_characteristic(d: SubgraphDensities) -> float:
    """Plug-in EZ characteristic T - (V/E)^3.

    Raises:
        DomainError: If the edge density is zero.
    """
    if d.e_hat == 0:
        raise DomainError("EZ characteristic undefined on empty graph")
    return d.t_hat - (d.v_hat / d.e_hat) ** 3
