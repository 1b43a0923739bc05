import numpy as np
import pytest

from oracles import dense_normalized_adjacency
from sgcl.augment import (
    AugmentationConfig,
    derive_seed,
    edge_dropout,
    node_dropout,
    random_walk_views,
    stratified_edge_dropout,
    stratified_node_dropout,
)
from sgcl.centrality import brandes_edge_betweenness, stratify
from sgcl.data import synth_dataset
from sgcl.graph import InteractionGraph


@pytest.fixture(scope="module")
def big():
    # ~10k edges
    return synth_dataset(200, 500, 1, 0.1, seed=0)


class TestEdgeDropout:
    def test_extremes(self, toy_graph):
        assert edge_dropout(toy_graph, 0.0, 1).edge_set() == toy_graph.edge_set()
        assert edge_dropout(toy_graph, 1.0, 1).graph.num_edges == 0

    def test_binomial_mean(self, big):
        e = big.num_edges
        kept = [edge_dropout(big, 0.1, s).graph.num_edges for s in range(100)]
        assert abs(np.mean(kept) - 0.9 * e) < 3 * np.sqrt(e * 0.1 * 0.9)

    def test_subset_and_determinism(self, big):
        a = edge_dropout(big, 0.3, 5)
        b = edge_dropout(big, 0.3, 5)
        assert a.edge_set() == b.edge_set()
        assert a.edge_set() <= big.edge_set()
        assert a.parent == big.fingerprint()

    def test_renormalized_on_view_degrees(self, toy_graph):
        v = edge_dropout(toy_graph, 0.4, 3)
        np.testing.assert_allclose(v.adjacency.to_dense(), dense_normalized_adjacency(v.graph),
                                   atol=1e-15)


class TestNodeDropout:
    def test_identity(self, toy_graph):
        assert node_dropout(toy_graph, 0.0, 0).edge_set() == toy_graph.edge_set()

    def test_removes_incident_edges(self):
        from sgcl.augment import drop_nodes

        g = InteractionGraph(2, 4, [(0, 0), (0, 1), (0, 2), (1, 3)])
        mask = np.zeros(6, dtype=bool)
        mask[0] = True
        assert g.num_edges - drop_nodes(g, mask).num_edges == 3

    def test_binomial_nodes(self):
        g = synth_dataset(400, 600, 1, 0.01, seed=2)
        dropped = []
        for s in range(100):
            rng = np.random.default_rng(s)
            dropped.append(int(np.sum(rng.random(g.num_nodes) < 0.1)))
            v = node_dropout(g, 0.1, s)
            assert v.edge_set() <= g.edge_set()
        assert abs(np.mean(dropped) - 100) < 3 * np.sqrt(90)


class TestRandomWalk:
    def test_zero_ratio_shares_full_graph(self, toy_graph):
        v = random_walk_views(toy_graph, 0.0, 3, 0)
        assert all(g.edge_set() == toy_graph.edge_set() for g in v.layer_graphs)

    def test_layers_distinct(self, big):
        v = random_walk_views(big, 0.1, 3, 11)
        sets = [g.edge_set() for g in v.layer_graphs]
        assert sets[0] != sets[1] and sets[1] != sets[2]
        e = big.num_edges
        for s in sets:
            assert abs(len(s) - 0.9 * e) < 4 * np.sqrt(e * 0.09)
        assert len(v.adjacency) == 3

    def test_one_layer_matches_edge_dropout(self, big):
        assert random_walk_views(big, 0.2, 1, 4).edge_set() == edge_dropout(big, 0.2, 4).edge_set()

    def test_needs_a_layer(self, toy_graph):
        with pytest.raises(ValueError):
            random_walk_views(toy_graph, 0.1, 0, 0)


@pytest.fixture(scope="module")
def setup():
    g = synth_dataset(60, 40, 2, 0.2, seed=3)
    return g, stratify(brandes_edge_betweenness(g))


class TestStratified:
    def test_identity_at_zero(self, setup):
        g, s = setup
        assert stratified_edge_dropout(g, s, "low", 0.0, 1).edge_set() == g.edge_set()

    def test_full_removal_of_highest(self, setup):
        g, s = setup
        v = stratified_edge_dropout(g, s, "highest", 1.0, 1)
        removed = g.edge_set() - v.edge_set()
        assert removed == {tuple(g.edges[k]) for k in s.members("highest")}

    def test_only_stratum_touched(self, setup):
        g, s = setup
        v = stratified_edge_dropout(g, s, "middle", 0.5, 2)
        outside = {tuple(g.edges[k]) for k in range(g.num_edges) if k not in set(s.members("middle"))}
        assert outside <= v.edge_set()

    def test_middle_rate(self, setup):
        g, s = setup
        size = len(s.members("middle"))
        removed = [g.num_edges - stratified_edge_dropout(g, s, "middle", 0.1, k).graph.num_edges
                   for k in range(100)]
        assert abs(np.mean(removed) - 0.1 * size) < 3 * np.sqrt(size * 0.1 * 0.9 / 100)

    def test_empty_stratum(self):
        g = InteractionGraph(1, 2, [(0, 0), (0, 1)])
        s = stratify(np.array([1.0, 0.5]))
        with pytest.raises(ValueError, match="stratum empty"):
            stratified_edge_dropout(g, s, "middle", 0.1, 0)

    def test_node_variant(self, setup):
        from sgcl.centrality import brandes_node_betweenness

        g, _ = setup
        ns = stratify(brandes_node_betweenness(g))
        v = stratified_node_dropout(g, ns, "highest", 1.0, 0)
        hit = set(ns.members("highest").tolist())
        for u, i in v.graph.edges:
            assert u not in hit and g.num_users + i not in hit


def test_config_validation():
    with pytest.raises(ValueError):
        AugmentationConfig(ratio=1.5)
    with pytest.raises(ValueError):
        AugmentationConfig(kind="mixup")


def test_derived_seeds_differ():
    seeds = {derive_seed(0, e, v) for e in range(10) for v in range(2)}
    assert len(seeds) == 20
    assert derive_seed(3, 1, 0) == derive_seed(3, 1, 0)
