"""LightGCN propagation with mean-over-layers readout, and its adjoint."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from sgcl.graph import NormalizedAdjacency, spmm

Adjacency = Union[NormalizedAdjacency, Sequence[NormalizedAdjacency]]


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 2
    dim: int = 64

    def __post_init__(self):
        if self.layers < 0:
            raise ValueError("layers must be >= 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


def init_embeddings(num_users: int, num_items: int, dim: int, seed: int) -> np.ndarray:
    """Xavier-uniform table of shape ``(m + n, dim)`` with fan_in = fan_out = dim."""
    bound = np.sqrt(6.0 / (2 * dim))
    rng = np.random.default_rng(seed)
    return rng.uniform(-bound, bound, size=(num_users + num_items, dim))


def _layer_adjs(adj: Adjacency, layers: int) -> list:
    if isinstance(adj, NormalizedAdjacency):
        return [adj] * layers
    adjs = list(adj)
    if len(adjs) < layers:
        raise ValueError(f"{len(adjs)} per-layer adjacencies supplied for {layers} layers")
    return adjs[:layers]


def propagate(adj: Adjacency, e0: np.ndarray, layers: int, return_layers: bool = False):
    """Mean of ``E, A E, A^2 E, ..., A^L E``.

    ``adj`` may be a list with one adjacency per layer (random-walk views);
    layer ``l`` then multiplies by ``adj[l - 1]``.
    """
    adjs = _layer_adjs(adj, layers)
    if adjs and e0.shape[0] != adjs[0].dimension:
        raise ValueError(f"dimension mismatch: adjacency {adjs[0].dimension}, table {e0.shape[0]}")
    outs = [np.asarray(e0, dtype=np.float64)]
    for a in adjs:
        outs.append(spmm(a, outs[-1]))
    mean = np.mean(outs, axis=0)
    return (mean, outs) if return_layers else mean


def backward_propagate(adj: Adjacency, grad_out: np.ndarray, layers: int) -> np.ndarray:
    """Gradient w.r.t. ``e0`` given the gradient w.r.t. :func:`propagate`'s output."""
    adjs = _layer_adjs(adj, layers)
    if adjs and grad_out.shape[0] != adjs[0].dimension:
        raise ValueError("dimension mismatch")
    share = np.asarray(grad_out, dtype=np.float64) / (layers + 1)
    g = share
    # reverse sweep; each adjacency is symmetric so it is its own transpose
    for a in reversed(adjs):
        g = share + spmm(a, g)
    return g


def score(e: np.ndarray, num_users: int, u: int, i: int) -> float:
    num_items = e.shape[0] - num_users
    if not (0 <= u < num_users and 0 <= i < num_items):
        raise IndexError(f"(user {u}, item {i}) out of range")
    return float(e[u] @ e[num_users + i])


def score_all_items(e: np.ndarray, num_users: int, u: int, exclude=()) -> tuple[np.ndarray, np.ndarray]:
    """``(items, scores)`` for every item of user ``u`` outside ``exclude``."""
    if not 0 <= u < num_users:
        raise IndexError(f"user {u} out of range")
    scores = e[num_users:] @ e[u]
    keep = np.ones(len(scores), dtype=bool)
    keep[np.asarray(list(exclude), dtype=np.int64)] = False
    items = np.flatnonzero(keep)
    return items, scores[items]
