import numpy as np
import pytest

from oracles import central_diff, dense_normalized_adjacency, dense_propagate, random_graph
from sgcl.encoder import (
    EncoderConfig,
    backward_propagate,
    init_embeddings,
    propagate,
    score,
    score_all_items,
)
from sgcl.graph import InteractionGraph, build_normalized_adjacency


class TestInit:
    def test_deterministic(self):
        a = init_embeddings(10, 20, 8, seed=4)
        b = init_embeddings(10, 20, 8, seed=4)
        assert a.tobytes() == b.tobytes()

    def test_bounds_and_mean(self):
        e = init_embeddings(400, 600, 64, seed=0)
        bound = np.sqrt(6 / 128)
        assert np.all(np.abs(e) <= bound)
        std_err = bound / np.sqrt(3) / np.sqrt(e.size)
        assert abs(e.mean()) < 4 * std_err

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EncoderConfig(layers=-1)
        with pytest.raises(ValueError):
            EncoderConfig(dim=0)


class TestPropagate:
    def test_zero_layers(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 3, 4, 0.5))
        e0 = rng.normal(size=(7, 3))
        np.testing.assert_array_equal(propagate(adj, e0, 0), e0)

    def test_single_edge(self):
        adj = build_normalized_adjacency(InteractionGraph(1, 1, [(0, 0)]))
        out = propagate(adj, np.array([[2.0], [5.0]]), 1)
        np.testing.assert_allclose(out, [[3.5], [3.5]])

    @pytest.mark.parametrize("seed", range(4))
    def test_dense_oracle(self, backend, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 4, 6, 0.4)
        e0 = rng.normal(size=(10, 5))
        got = propagate(build_normalized_adjacency(g), e0, 3)
        np.testing.assert_allclose(got, dense_propagate(dense_normalized_adjacency(g), e0, 3),
                                   atol=1e-10)

    def test_linear(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 8, 9, 0.3))
        x, y = rng.normal(size=(2, 17, 4))
        np.testing.assert_allclose(propagate(adj, 2 * x - y, 3),
                                   2 * propagate(adj, x, 3) - propagate(adj, y, 3), atol=1e-10)

    def test_prefix_mean(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 8, 9, 0.3))
        e0 = rng.normal(size=(17, 4))
        _, layers = propagate(adj, e0, 4, return_layers=True)
        for L in range(5):
            np.testing.assert_allclose(propagate(adj, e0, L), np.mean(layers[:L + 1], axis=0),
                                       atol=1e-14)

    def test_isolated_node_scaled_only(self, rng):
        g = InteractionGraph(3, 2, [(0, 0), (1, 0)])  # user 2 and item 1 isolated
        e0 = rng.normal(size=(5, 3))
        out = propagate(build_normalized_adjacency(g), e0, 2)
        np.testing.assert_allclose(out[2], e0[2] / 3)
        np.testing.assert_allclose(out[4], e0[4] / 3)

    def test_per_layer_list_equals_shared(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 5, 5, 0.4))
        e0 = rng.normal(size=(10, 2))
        np.testing.assert_array_equal(propagate([adj] * 3, e0, 3), propagate(adj, e0, 3))

    def test_dimension_mismatch(self):
        adj = build_normalized_adjacency(InteractionGraph(1, 1, [(0, 0)]))
        with pytest.raises(ValueError):
            propagate(adj, np.ones((3, 2)), 1)


class TestBackward:
    def test_zero_layers(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 3, 3, 0.5))
        g = rng.normal(size=(6, 2))
        np.testing.assert_array_equal(backward_propagate(adj, g, 0), g)

    @pytest.mark.parametrize("layers", [1, 2, 3])
    def test_adjoint_identity(self, rng, layers):
        adj = build_normalized_adjacency(random_graph(rng, 6, 7, 0.3))
        for _ in range(10):
            e, g = rng.normal(size=(2, 13, 4))
            lhs = np.sum(propagate(adj, e, layers) * g)
            rhs = np.sum(e * backward_propagate(adj, g, layers))
            assert abs(lhs - rhs) < 1e-10

    def test_adjoint_with_per_layer_views(self, rng):
        from sgcl.augment import random_walk_views

        g = random_graph(rng, 6, 7, 0.4)
        adjs = random_walk_views(g, 0.3, 3, seed=1).adjacency
        e, gr = rng.normal(size=(2, 13, 4))
        lhs = np.sum(propagate(adjs, e, 3) * gr)
        rhs = np.sum(e * backward_propagate(adjs, gr, 3))
        assert abs(lhs - rhs) < 1e-10

    def test_finite_difference(self, rng):
        adj = build_normalized_adjacency(random_graph(rng, 4, 4, 0.5))
        e0 = rng.normal(size=(8, 3))
        w = rng.normal(size=(8, 3))

        def f(x):
            return float(np.sum(np.sin(propagate(adj, x, 2)) * w))

        analytic = backward_propagate(adj, np.cos(propagate(adj, e0, 2)) * w, 2)
        numeric = central_diff(f, e0.copy())
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(numeric), 1e-3)
        assert rel.max() < 1e-6


class TestScore:
    def test_orthogonal_and_self(self):
        e = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        assert score(e, 1, 0, 0) == 0.0
        assert score(e, 1, 0, 1) == 1.0

    def test_dot_oracle(self, rng):
        e = rng.normal(size=(7, 16))
        for u in range(3):
            for i in range(4):
                want = sum(e[u, k] * e[3 + i, k] for k in range(16))
                assert abs(score(e, 3, u, i) - want) < 1e-12

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            score(np.ones((3, 2)), 1, 0, 2)

    def test_score_all_items(self, rng):
        e = rng.normal(size=(7, 4))
        items, s = score_all_items(e, 3, 1)
        assert len(items) == 4
        for it, v in zip(items, s):
            assert abs(v - score(e, 3, 1, int(it))) < 1e-12
        items, _ = score_all_items(e, 3, 1, exclude=range(4))
        assert len(items) == 0
        items, _ = score_all_items(e, 3, 1, exclude={0, 2})
        assert items.tolist() == [1, 3]
