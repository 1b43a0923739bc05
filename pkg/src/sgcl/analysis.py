"""Noisy-view diagnostics and training-set corruption harnesses."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from sgcl.graph import InteractionGraph, ceil_frac
from sgcl.losses import row_cosines

NOISY_PERCENTILE = 0.2
NOISY_COSINE = 0.1
MAX_FAKE_TRIES = 1000


@dataclass(frozen=True)
class ViewSimilarityReport:
    cosines: np.ndarray
    ranks: np.ndarray  # 0 = least similar; ties broken by node index
    flagged: np.ndarray  # sorted node indices judged noisy

    @property
    def percentiles(self) -> np.ndarray:
        return self.ranks / max(len(self.ranks), 1)

    @property
    def num_flagged(self) -> int:
        return len(self.flagged)


def _ascending_ranks(values: np.ndarray) -> np.ndarray:
    order = np.lexsort((np.arange(len(values)), values))
    ranks = np.empty(len(values), dtype=np.int64)
    ranks[order] = np.arange(len(values))
    return ranks


def flag_noisy(cosines: np.ndarray, ranks: np.ndarray | None = None) -> np.ndarray:
    """Nodes in the bottom 20% by similarity that also have cosine below 0.1."""
    cosines = np.asarray(cosines)
    if ranks is None:
        ranks = _ascending_ranks(cosines)
    cut = ceil_frac(NOISY_PERCENTILE, len(cosines))
    return np.flatnonzero((ranks < cut) & (cosines < NOISY_COSINE))


def view_similarity(e_orig: np.ndarray, e_view: np.ndarray) -> ViewSimilarityReport:
    if e_orig.shape != e_view.shape:
        raise ValueError(f"shape mismatch: {e_orig.shape} vs {e_view.shape}")
    cos = np.clip(row_cosines(e_orig, e_view), -1.0, 1.0)
    ranks = _ascending_ranks(cos)
    return ViewSimilarityReport(cos, ranks, flag_noisy(cos, ranks))


def inject_fake_edges(g: InteractionGraph, ratio: float, seed: int) -> InteractionGraph:
    """Replace ``floor(ratio * |E|)`` random genuine edges with random non-edges."""
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must lie in [0, 1)")
    k = int(np.floor(ratio * g.num_edges + 1e-9))
    if k == 0:
        return g
    rng = np.random.default_rng(seed)
    removed = rng.choice(g.num_edges, size=k, replace=False)
    n = g.num_items
    taken = set(g.edge_keys().tolist())
    fakes = []
    for _ in range(k):
        for _ in range(MAX_FAKE_TRIES):
            key = int(rng.integers(g.num_users)) * n + int(rng.integers(n))
            if key not in taken:
                break
        else:
            raise ValueError("graph too dense to sample non-edges")
        taken.add(key)
        fakes.append((key // n, key % n))
    keep = np.ones(g.num_edges, dtype=bool)
    keep[removed] = False
    edges = np.concatenate([g.edges[keep], np.asarray(fakes, dtype=np.int64)])
    return g.with_edges(edges)


def sparsify(g: InteractionGraph, keep_ratio: float, seed: int) -> InteractionGraph:
    """Keep ``floor(keep_ratio * |E|)`` edges: a prefix of one seeded permutation,
    so smaller ratios give subsets of larger ones for the same seed."""
    if not 0.0 < keep_ratio <= 1.0:
        raise ValueError("keep_ratio must lie in (0, 1]")
    k = int(np.floor(keep_ratio * g.num_edges + 1e-9))
    perm = np.random.default_rng(seed).permutation(g.num_edges)
    return g.with_edges(g.edges[perm[:k]])


def export_embeddings(e: np.ndarray, num_users: int, path, graph: InteractionGraph | None = None):
    """CSV rows ``node_kind, node_id, v0 .. v{d-1}``; ids are raw ids when ``graph`` is given."""
    d = e.shape[1]
    num_items = e.shape[0] - num_users
    uids = graph.user_ids if graph is not None else range(num_users)
    iids = graph.item_ids if graph is not None else range(num_items)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_kind", "node_id"] + [f"v{j}" for j in range(d)])
        for kind, ids, offset in (("user", uids, 0), ("item", iids, num_users)):
            for k, raw in enumerate(ids):
                w.writerow([kind, raw] + [repr(float(x)) for x in e[offset + k]])


def read_embeddings(path):
    """Inverse of :func:`export_embeddings`: ``(kinds, ids, values)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    kinds = [r[0] for r in rows]
    ids = [r[1] for r in rows]
    values = np.array([[float(x) for x in r[2:]] for r in rows])
    return kinds, ids, values
