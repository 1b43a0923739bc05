"""Pure-Python/numpy versions of the compiled kernels.

Used when the extension is not built, or when ``SGCL_KERNELS=python``.
Signatures and results match :mod:`sgcl._ckernels`.
"""

from collections import deque

import numpy as np


def csr_spmm(indptr, indices, data, x):
    n_rows = len(indptr) - 1
    out = np.zeros((n_rows, x.shape[1]), dtype=np.float64)
    if len(data) == 0:
        return out
    contrib = data[:, None] * x[indices]
    counts = np.diff(indptr)
    nonempty = np.flatnonzero(counts)
    out[nonempty] = np.add.reduceat(contrib, indptr[nonempty], axis=0)
    return out


def brandes(indptr, indices, edge_ids, n_edges):
    n = len(indptr) - 1
    nbrs = [
        list(zip(indices[indptr[v]:indptr[v + 1]].tolist(),
                 edge_ids[indptr[v]:indptr[v + 1]].tolist()))
        for v in range(n)
    ]
    node = [0.0] * n
    edge = [0.0] * n_edges
    for s in range(n):
        sigma = [0.0] * n
        dist = [-1] * n
        sigma[s] = 1.0
        dist[s] = 0
        stack = []
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w, _ in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v, eid in nbrs[w]:
                if dist[v] == dist[w] - 1:
                    c = sigma[v] / sigma[w] * (1.0 + delta[w])
                    edge[eid] += c
                    delta[v] += c
            if w != s:
                node[w] += delta[w]
    # every unordered pair was visited from both endpoints
    return np.asarray(node) * 0.5, np.asarray(edge) * 0.5
