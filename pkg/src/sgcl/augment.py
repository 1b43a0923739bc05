"""Stochastic graph views for contrastive training and the dropout experiments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from sgcl.centrality import ImportanceStrata, Level
from sgcl.graph import InteractionGraph, build_normalized_adjacency

KINDS = ("edge_dropout", "node_dropout", "random_walk")


@dataclass(frozen=True)
class AugmentationConfig:
    kind: str = "edge_dropout"
    ratio: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown augmentation kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError("augmentation ratio must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class ViewGraph:
    """A perturbed copy of a graph plus the adjacency used at each layer.

    ``layer_graphs`` holds one graph per propagation layer for random-walk
    views and a single shared graph otherwise.
    """

    layer_graphs: tuple
    kind: str
    ratio: float
    seed: int
    parent: str
    _adjs: list = field(default_factory=list, repr=False)

    @property
    def graph(self) -> InteractionGraph:
        return self.layer_graphs[0]

    @property
    def adjacency(self):
        """One :class:`NormalizedAdjacency`, or a list of them for per-layer views."""
        if not self._adjs:
            self._adjs.extend(build_normalized_adjacency(g) for g in self.layer_graphs)
        return self._adjs[0] if len(self._adjs) == 1 else list(self._adjs)

    def edge_set(self) -> set:
        return self.graph.edge_set()


def _view(graphs, kind, ratio, seed, parent: InteractionGraph) -> ViewGraph:
    return ViewGraph(tuple(graphs), kind, ratio, seed, parent.fingerprint())


def derive_seed(base_seed: int, epoch: int, view_index: int) -> int:
    """Reproducible per-epoch, per-view seed."""
    return int(np.random.SeedSequence([base_seed, epoch, view_index]).generate_state(1)[0])


def _drop_edges(g: InteractionGraph, ratio: float, rng) -> InteractionGraph:
    keep = rng.random(g.num_edges) >= ratio
    return g.with_edges(g.edges[keep])


def edge_dropout(g: InteractionGraph, ratio: float, seed: int) -> ViewGraph:
    rng = np.random.default_rng(seed)
    return _view([_drop_edges(g, ratio, rng)], "edge_dropout", ratio, seed, g)


def drop_nodes(g: InteractionGraph, node_mask: np.ndarray) -> InteractionGraph:
    """Remove every edge incident to a masked block-graph node."""
    m = g.num_users
    dead = node_mask[g.edges[:, 0]] | node_mask[m + g.edges[:, 1]]
    return g.with_edges(g.edges[~dead])


def node_dropout(g: InteractionGraph, ratio: float, seed: int) -> ViewGraph:
    rng = np.random.default_rng(seed)
    mask = rng.random(g.num_nodes) < ratio
    return _view([drop_nodes(g, mask)], "node_dropout", ratio, seed, g)


def random_walk_views(g: InteractionGraph, ratio: float, layers: int, seed: int) -> ViewGraph:
    if layers < 1:
        raise ValueError("random-walk views need at least one layer")
    rng = np.random.default_rng(seed)
    graphs = [_drop_edges(g, ratio, rng) for _ in range(layers)]
    return _view(graphs, "random_walk", ratio, seed, g)


def make_view(g: InteractionGraph, cfg: AugmentationConfig, layers: int, seed: int | None = None):
    seed = cfg.seed if seed is None else seed
    if cfg.kind == "edge_dropout":
        return edge_dropout(g, cfg.ratio, seed)
    if cfg.kind == "node_dropout":
        return node_dropout(g, cfg.ratio, seed)
    return random_walk_views(g, cfg.ratio, max(layers, 1), seed)


def stratified_edge_dropout(
    g: InteractionGraph, strata: ImportanceStrata, level, ratio: float, seed: int
) -> ViewGraph:
    """Drop edges of one importance level at ``ratio``; other edges are untouched.

    ``strata`` must be computed over ``g.edges`` in order.
    """
    if len(strata.levels) != g.num_edges:
        raise ValueError("strata do not match the graph's edges")
    members = strata.members(level)
    if len(members) == 0:
        raise ValueError("stratum empty")
    rng = np.random.default_rng(seed)
    keep = np.ones(g.num_edges, dtype=bool)
    keep[members[rng.random(len(members)) < ratio]] = False
    return _view([g.with_edges(g.edges[keep])], f"stratified_edge:{Level.parse(level).name.lower()}",
                 ratio, seed, g)


def stratified_node_dropout(
    g: InteractionGraph, strata: ImportanceStrata, level, ratio: float, seed: int
) -> ViewGraph:
    """Node analogue of :func:`stratified_edge_dropout`; strata index block-graph nodes."""
    if len(strata.levels) != g.num_nodes:
        raise ValueError("strata do not match the graph's nodes")
    members = strata.members(level)
    if len(members) == 0:
        raise ValueError("stratum empty")
    rng = np.random.default_rng(seed)
    mask = np.zeros(g.num_nodes, dtype=bool)
    mask[members[rng.random(len(members)) < ratio]] = True
    return _view([drop_nodes(g, mask)], f"stratified_node:{Level.parse(level).name.lower()}",
                 ratio, seed, g)
