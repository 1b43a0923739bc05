"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``SGCL_KERNELS=python`` to force the fallback (useful for benchmarks and
for cross-checking the two implementations).
"""

import os

from sgcl import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("SGCL_KERNELS", "").lower() != "python":
    try:
        from sgcl import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        _impl = _ckernels


def available_backends():
    backends = {"python": _pykernels}
    try:
        from sgcl import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _ckernels
    return backends


def csr_spmm(indptr, indices, data, x):
    return _impl.csr_spmm(indptr, indices, data, x)


def brandes(indptr, indices, edge_ids, n_edges):
    return _impl.brandes(indptr, indices, edge_ids, n_edges)
