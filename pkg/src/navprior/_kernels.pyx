# cython: language_level=3
"""Compiled twin of ``navprior._kernels_py``.

Keep the two implementations semantically identical: same relaxation and
tie-break rules in dijkstra, same uniform-to-index mapping in the walk.
The parity test suite compares them output-for-output.
"""

import numpy as np

cimport numpy as cnp
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue

cnp.import_array()

BACKEND = "cython"

ctypedef pair[double, long long] dnode


def dijkstra(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
             cnp.float64_t[::1] weights, long long source):
    """Single-source shortest paths on a CSR graph; see the pure twin."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    dist_arr = np.full(n, np.inf, dtype=np.float64)
    pred_arr = np.full(n, -1, dtype=np.int64)
    cdef cnp.float64_t[::1] dist = dist_arr
    cdef cnp.int64_t[::1] pred = pred_arr
    # std::priority_queue is a max-heap; negate both fields to pop the
    # smallest (distance, node) pair first, matching heapq tuple order.
    cdef priority_queue[dnode] heap
    cdef dnode top
    cdef double d, nd
    cdef long long u, v
    cdef Py_ssize_t k

    dist[source] = 0.0
    heap.push(dnode(-0.0, -source))
    while not heap.empty():
        top = heap.top()
        heap.pop()
        d = -top.first
        u = -top.second
        if d > dist[u]:
            continue
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            nd = d + weights[k]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heap.push(dnode(-nd, -v))
    return dist_arr, pred_arr


def self_avoiding_walk(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices,
                       long long start, long long steps,
                       cnp.float64_t[::1] uniforms):
    """Uniform self-avoiding walk of exactly ``steps`` hops, or None if stuck."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    path_arr = np.empty(steps + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] path = path_arr
    visited_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] visited = visited_arr
    cand_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cand = cand_arr
    cdef long long cur = start, v
    cdef Py_ssize_t t, k, j, m

    path[0] = start
    visited[start] = 1
    for t in range(steps):
        m = 0
        for k in range(indptr[cur], indptr[cur + 1]):
            v = indices[k]
            if not visited[v]:
                cand[m] = v
                m += 1
        if m == 0:
            return None
        j = <Py_ssize_t>(uniforms[t] * m)
        if j >= m:
            j = m - 1
        cur = cand[j]
        visited[cur] = 1
        path[t + 1] = cur
    return path_arr
