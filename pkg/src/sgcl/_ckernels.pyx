# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: CSR sparse-dense product and Brandes betweenness."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


def csr_spmm(const int64_t[::1] indptr, const int64_t[::1] indices,
             const double[::1] data, const double[:, ::1] x):
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t d = x.shape[1]
    out_arr = np.zeros((n_rows, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, k, j, c
    cdef double v
    for r in range(n_rows):
        for k in range(indptr[r], indptr[r + 1]):
            c = indices[k]
            v = data[k]
            for j in range(d):
                out[r, j] += v * x[c, j]
    return out_arr


def brandes(const int64_t[::1] indptr, const int64_t[::1] indices,
            const int64_t[::1] edge_ids, Py_ssize_t n_edges):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    node_arr = np.zeros(n, dtype=np.float64)
    edge_arr = np.zeros(n_edges, dtype=np.float64)
    cdef double[::1] node = node_arr
    cdef double[::1] edge = edge_arr
    cdef double[::1] sigma = np.zeros(n, dtype=np.float64)
    cdef double[::1] delta = np.zeros(n, dtype=np.float64)
    cdef int64_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] order = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t s, v, w, k, head, tail, pos
    cdef double c
    for s in range(n):
        for v in range(n):
            sigma[v] = 0.0
            delta[v] = 0.0
            dist[v] = -1
        sigma[s] = 1.0
        dist[s] = 0
        order[0] = s
        head = 0
        tail = 1
        # BFS; `order` doubles as the queue and, read backwards, the stack
        while head < tail:
            v = order[head]
            head += 1
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        for pos in range(tail - 1, 0, -1):
            w = order[pos]
            for k in range(indptr[w], indptr[w + 1]):
                v = indices[k]
                if dist[v] == dist[w] - 1:
                    c = sigma[v] / sigma[w] * (1.0 + delta[w])
                    edge[edge_ids[k]] += c
                    delta[v] += c
            node[w] += delta[w]
    for v in range(n):
        node[v] *= 0.5
    for k in range(n_edges):
        edge[k] *= 0.5
    return node_arr, edge_arr
