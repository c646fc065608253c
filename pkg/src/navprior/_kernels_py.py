"""Pure-Python reference implementation of the hot graph kernels.

Semantics must match ``navprior._kernels`` (the compiled twin) bit for bit:
same relaxation order, same tie-breaking, same float arithmetic, and the
self-avoiding walk consumes exactly one uniform per executed step.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND = "pure-python"


def dijkstra(indptr: np.ndarray, indices: np.ndarray, weights: np.ndarray,
             source: int) -> tuple[np.ndarray, np.ndarray]:
    """Single-source shortest paths on a CSR graph.

    Returns (dist, pred); unreachable nodes get dist=inf, pred=-1. Ties are
    resolved deterministically: the heap orders equal distances by node
    index and relaxation uses strict improvement only, so the predecessor
    tree (and any path extracted from it) is a pure function of the graph.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf, dtype=np.float64)
    pred = np.full(n, -1, dtype=np.int64)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return dist, pred


def self_avoiding_walk(indptr: np.ndarray, indices: np.ndarray, start: int,
                       steps: int, uniforms: np.ndarray) -> np.ndarray | None:
    """Uniform self-avoiding walk of exactly ``steps`` hops, or None if stuck.

    Step t picks uniformly (via uniforms[t]) among the not-yet-visited
    neighbors of the current node, taken in CSR order.
    """
    n = len(indptr) - 1
    path = np.empty(steps + 1, dtype=np.int64)
    path[0] = start
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    cur = start
    for t in range(steps):
        cand = [v for v in indices[indptr[cur]:indptr[cur + 1]] if not visited[v]]
        k = len(cand)
        if k == 0:
            return None
        j = int(uniforms[t] * k)
        if j >= k:  # guard uniforms[t] == 1.0
            j = k - 1
        cur = int(cand[j])
        visited[cur] = True
        path[t + 1] = cur
    return path
