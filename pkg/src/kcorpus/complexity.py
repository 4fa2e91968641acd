"""Density and scale metrics for structure networks.

Degree centrality of a node is ``degree / (n - 1)``; a network's density is
its maximum.  Scale is the mean shortest-path length over ordered pairs,
from an all-pairs Floyd-Warshall distance matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from kcorpus.structure import StructureNetwork

# unreachable marker; INF + INF must not overflow the matrix dtype
_INF16 = np.iinfo(np.int16).max // 2
_INF32 = np.iinfo(np.int32).max // 2


class UndefinedMetricError(ValueError):
    """Metric requested on a network where it has no value (n < 2)."""


class DisconnectedError(ValueError):
    def __init__(self, components: int):
        super().__init__(f"network is disconnected ({components} components)")
        self.components = components


@dataclass(frozen=True)
class ComplexityReport:
    n: int
    max_dc: float
    mean_distance: float
    argmax_node: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "max_dc": round(self.max_dc, 6),
            "mean_distance": round(self.mean_distance, 6),
            "argmax_node": self.argmax_node,
        }


def _as_graph(net) -> tuple[int, Sequence[tuple[int, int]]]:
    if isinstance(net, StructureNetwork):
        return len(net.nodes), net.edges
    n, edges = net
    return n, edges


def _degrees(n: int, edges) -> list[int]:
    deg = [0] * n
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return deg


def degree_centrality(net, node: int) -> float:
    """``net`` is a StructureNetwork or an ``(n, edges)`` pair."""
    n, edges = _as_graph(net)
    if n < 2:
        raise UndefinedMetricError("degree centrality needs at least 2 nodes")
    if not 0 <= node < n:
        raise IndexError(f"node {node} out of range for {n} nodes")
    k = sum((a == node) + (b == node) for a, b in edges)
    return k / (n - 1)


def max_degree_centrality(net) -> tuple[float, int]:
    """Largest degree centrality and the lowest node id attaining it."""
    n, edges = _as_graph(net)
    if n < 2:
        raise UndefinedMetricError("degree centrality needs at least 2 nodes")
    deg = _degrees(n, edges)
    best = max(deg)
    return best / (n - 1), deg.index(best)


def all_pairs_shortest_paths(net) -> np.ndarray:
    """Hop-count distance matrix by Floyd-Warshall.

    The k loop is explicit; each relaxation step updates the whole (i, j)
    plane at once.
    """
    n, edges = _as_graph(net)
    small = n < _INF16
    inf = _INF16 if small else _INF32
    dist = np.full((n, n), inf, dtype=np.int16 if small else np.int32)
    np.fill_diagonal(dist, 0)
    for a, b in edges:
        if a != b:
            dist[a, b] = 1
            dist[b, a] = 1
    via = np.empty_like(dist)
    for k in range(n):
        np.add(dist[:, k, None], dist[None, k, :], out=via)
        np.minimum(dist, via, out=dist)
    if n and (dist >= inf).any():
        raise DisconnectedError(_count_components(n, edges))
    return dist.astype(np.int64)


def _count_components(n: int, edges) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(x) for x in range(n)})


def mean_distance(dist: np.ndarray) -> float:
    n = dist.shape[0]
    if n < 2:
        raise UndefinedMetricError("mean distance needs at least 2 nodes")
    total = int(dist.sum(dtype=np.int64))  # exact; diagonal is zero
    return total / (n * (n - 1))


def analyze(net) -> ComplexityReport:
    n, _ = _as_graph(net)
    max_dc, argmax = max_degree_centrality(net)
    md = mean_distance(all_pairs_shortest_paths(net))
    return ComplexityReport(n=n, max_dc=max_dc, mean_distance=md, argmax_node=argmax)


def mean_of(values: Iterable[float]) -> float:
    """Order-insensitive mean, used when aggregating per-sample values."""
    vals = sorted(values)
    return math.fsum(vals) / len(vals) if vals else 0.0
