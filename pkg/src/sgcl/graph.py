"""Bipartite interaction graph, train/test split and LightGCN normalization."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from sgcl import kernels


class ParseError(ValueError):
    pass


def ceil_frac(fraction: float, count: int) -> int:
    """``ceil(fraction * count)`` robust to float round-up (0.1 * 30 -> 3, not 4)."""
    return int(math.ceil(fraction * count - 1e-9))


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Deduplicated user-item edges with per-node adjacency.

    ``edges`` is an ``(E, 2)`` int64 array of ``(user, item)`` pairs sorted
    lexicographically.  Views and splits share the parent's id maps.
    """

    num_users: int
    num_items: int
    edges: np.ndarray
    user_ids: tuple = ()
    item_ids: tuple = ()
    user_adj: list = field(init=False, repr=False)
    item_adj: list = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if edges[:, 0].min() < 0 or edges[:, 0].max() >= self.num_users:
                raise ValueError("user index out of range")
            if edges[:, 1].min() < 0 or edges[:, 1].max() >= self.num_items:
                raise ValueError("item index out of range")
            keys = np.unique(edges[:, 0] * self.num_items + edges[:, 1])
            edges = np.stack([keys // self.num_items, keys % self.num_items], axis=1)
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        if not self.user_ids:
            object.__setattr__(self, "user_ids", tuple(range(self.num_users)))
        if not self.item_ids:
            object.__setattr__(self, "item_ids", tuple(range(self.num_items)))
        if len(self.user_ids) != self.num_users or len(self.item_ids) != self.num_items:
            raise ValueError("id maps do not match node counts")
        object.__setattr__(self, "user_adj", _group(edges[:, 0], edges[:, 1], self.num_users))
        by_item = np.lexsort((edges[:, 0], edges[:, 1]))
        object.__setattr__(
            self, "item_adj", _group(edges[by_item, 1], edges[by_item, 0], self.num_items)
        )

    @property
    def num_nodes(self) -> int:
        return self.num_users + self.num_items

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def user_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.num_users)

    def item_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.num_items)

    def edge_keys(self) -> np.ndarray:
        """Sorted scalar keys ``u * n + i``, handy for vectorized membership tests."""
        return self.edges[:, 0] * self.num_items + self.edges[:, 1]

    def has_edges(self, users, items) -> np.ndarray:
        keys = self.edge_keys()
        q = np.asarray(users, dtype=np.int64) * self.num_items + np.asarray(items, dtype=np.int64)
        if not len(keys):
            return np.zeros(q.shape, dtype=bool)
        pos = np.searchsorted(keys, q).clip(max=len(keys) - 1)
        return keys[pos] == q

    @property
    def user_index(self) -> dict:
        return {raw: k for k, raw in enumerate(self.user_ids)}

    @property
    def item_index(self) -> dict:
        return {raw: k for k, raw in enumerate(self.item_ids)}

    def with_edges(self, edges) -> "InteractionGraph":
        """Same node sets and id maps, different edge set."""
        return InteractionGraph(self.num_users, self.num_items, edges, self.user_ids, self.item_ids)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.array([self.num_users, self.num_items], dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.edges).tobytes())
        return h.hexdigest()[:16]

    def edge_set(self) -> set:
        return set(map(tuple, self.edges.tolist()))


def _group(keys: np.ndarray, values: np.ndarray, size: int) -> list:
    bounds = np.searchsorted(keys, np.arange(size + 1))
    return [values[bounds[k]:bounds[k + 1]].copy() for k in range(size)]


def parse_interactions(
    lines: Iterable[str],
    sep: str | None = None,
    user_col: int = 0,
    item_col: int = 1,
    rating_col: int | None = None,
    rating_threshold: float = 4.0,
) -> InteractionGraph:
    """Build a graph from delimited text, one interaction per line.

    ``sep=None`` splits on any whitespace.  Lines starting with ``#`` are
    comments.  With ``rating_col`` set, rows rated below ``rating_threshold``
    are dropped.  Internal ids follow first appearance among kept rows.
    """
    users: dict = {}
    items: dict = {}
    pairs = []
    need = max(user_col, item_col, rating_col if rating_col is not None else 0) + 1
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(sep) if sep is not None else line.split()
        fields = [f.strip() for f in fields]
        if len(fields) < need:
            raise ParseError(f"line {lineno}: expected at least {need} fields, got {len(fields)}")
        u_raw, i_raw = fields[user_col], fields[item_col]
        if not u_raw or not i_raw:
            raise ParseError(f"line {lineno}: empty user or item field")
        if rating_col is not None:
            try:
                rating = float(fields[rating_col])
            except ValueError:
                raise ParseError(f"line {lineno}: bad rating {fields[rating_col]!r}") from None
            if rating < rating_threshold:
                continue
        u = users.setdefault(u_raw, len(users))
        i = items.setdefault(i_raw, len(items))
        pairs.append((u, i))
    if not pairs:
        raise ParseError("no interactions")
    return InteractionGraph(len(users), len(items), pairs, tuple(users), tuple(items))


def split_train_test(g: InteractionGraph, test_ratio: float, seed: int):
    """Per-user random split.

    Each user sends ``ceil(test_ratio * deg)`` of its edges to test, capped at
    ``deg - 1`` so at least one edge always stays in train.
    """
    if not 0.0 < test_ratio < 1.0:
        raise ValueError("test_ratio must lie in (0, 1)")
    if g.num_edges == 0:
        raise ValueError("graph has no edges")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for u, items in enumerate(g.user_adj):
        deg = len(items)
        if deg == 0:
            continue
        n_test = min(ceil_frac(test_ratio, deg), deg - 1)
        perm = rng.permutation(deg)
        for k in perm[:n_test]:
            test.append((u, items[k]))
        for k in perm[n_test:]:
            train.append((u, items[k]))
    return g.with_edges(train), g.with_edges(test)


@dataclass(frozen=True, eq=False)
class NormalizedAdjacency:
    """Symmetric ``D^-1/2 A D^-1/2`` over the ``(m + n)``-node block graph, CSR layout.

    Node ``u < m`` is a user, node ``m + i`` is item ``i``.
    """

    num_users: int
    num_items: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @property
    def dimension(self) -> int:
        return self.num_users + self.num_items

    @property
    def nnz(self) -> int:
        return len(self.data)

    def lookup(self, row: int, col: int) -> float:
        lo, hi = self.indptr[row], self.indptr[row + 1]
        k = lo + np.searchsorted(self.indices[lo:hi], col)
        if k < hi and self.indices[k] == col:
            return float(self.data[k])
        return 0.0

    def entries(self):
        rows = np.repeat(np.arange(self.dimension), np.diff(self.indptr))
        return rows, self.indices, self.data

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension))
        rows, cols, vals = self.entries()
        out[rows, cols] = vals
        return out

    def __matmul__(self, x):
        return spmm(self, x)


def block_csr(g: InteractionGraph):
    """CSR structure of the undirected user+item graph.

    Returns ``(indptr, indices, edge_ids)`` where ``edge_ids[k]`` is the row
    of ``g.edges`` that entry ``k`` came from.
    """
    m, e = g.num_users, g.num_edges
    u = g.edges[:, 0]
    i = g.edges[:, 1] + m
    rows = np.concatenate([u, i])
    cols = np.concatenate([i, u])
    eids = np.concatenate([np.arange(e), np.arange(e)]).astype(np.int64)
    order = np.lexsort((cols, rows))
    rows, cols, eids = rows[order], cols[order], eids[order]
    indptr = np.zeros(g.num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=g.num_nodes), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols, dtype=np.int64), np.ascontiguousarray(eids)


def build_normalized_adjacency(g: InteractionGraph) -> NormalizedAdjacency:
    indptr, indices, _ = block_csr(g)
    deg = np.diff(indptr).astype(np.float64)
    rows = np.repeat(np.arange(g.num_nodes), np.diff(indptr))
    data = 1.0 / np.sqrt(deg[rows] * deg[indices]) if len(rows) else np.zeros(0)
    for arr in (indptr, indices, data):
        arr.setflags(write=False)
    return NormalizedAdjacency(g.num_users, g.num_items, indptr, indices, np.ascontiguousarray(data))


def spmm(adj: NormalizedAdjacency, x: np.ndarray) -> np.ndarray:
    """Sparse ``adj @ x`` for a dense ``(m + n, d)`` operand."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[:, None]
    if x.shape[0] != adj.dimension:
        raise ValueError(f"dimension mismatch: adjacency {adj.dimension}, operand {x.shape[0]}")
    out = kernels.csr_spmm(adj.indptr, adj.indices, adj.data, np.ascontiguousarray(x))
    return out[:, 0] if squeeze else out
