import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_normalized_adjacency, random_graph
from sgcl.graph import (
    InteractionGraph,
    ParseError,
    build_normalized_adjacency,
    parse_interactions,
    split_train_test,
    spmm,
)


class TestParse:
    def test_first_appearance_ids(self):
        g = parse_interactions(["a 1", "a 2", "b 1"])
        assert (g.num_users, g.num_items) == (2, 2)
        assert g.edge_set() == {(0, 0), (0, 1), (1, 0)}
        assert g.user_ids == ("a", "b") and g.item_ids == ("1", "2")

    def test_duplicates_collapse(self):
        g = parse_interactions(["a 1", "a 1"])
        assert g.num_edges == 1
        assert g.edge_set() == {(0, 0)}

    def test_rating_threshold_and_comments(self):
        lines = ["# header", "u1\ti1\t5\t100", "u1\ti2\t3\t101", "", "u2\ti2\t4\t102"]
        g = parse_interactions(lines, sep="\t", rating_col=2, rating_threshold=4)
        assert g.num_edges == 2
        assert g.item_ids == ("i1", "i2")

    def test_threshold_count_matches_text_filter(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [f"{rng.integers(50)}\t{rng.integers(80)}\t{rng.integers(1, 6)}\t0" for _ in range(2000)]
        path = tmp_path / "u.data"
        path.write_text("\n".join(rows))
        kept = {(r.split("\t")[0], r.split("\t")[1]) for r in rows if int(r.split("\t")[2]) >= 4}
        g = parse_interactions(path.read_text().splitlines(), sep="\t", rating_col=2)
        assert g.num_edges == len(kept)

    def test_comma_separator(self):
        g = parse_interactions(["x,y", "x,z"], sep=",")
        assert g.num_items == 2

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(ParseError, match="line 2"):
            parse_interactions(["a 1", "lonely"])

    def test_bad_rating(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_interactions(["a 1 five"], rating_col=2)

    def test_empty(self):
        with pytest.raises(ParseError, match="no interactions"):
            parse_interactions(["# nothing", ""])
        with pytest.raises(ParseError, match="no interactions"):
            parse_interactions(["a 1 2"], rating_col=2)


class TestGraphInvariants:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 9)), max_size=60))
    def test_adjacency_consistent_with_edges(self, pairs):
        g = InteractionGraph(8, 10, pairs)
        assert g.num_edges == len(set(pairs))
        assert sum(len(a) for a in g.user_adj) == g.num_edges == sum(len(a) for a in g.item_adj)
        rebuilt_u = {(u, int(i)) for u, items in enumerate(g.user_adj) for i in items}
        rebuilt_i = {(int(u), i) for i, users in enumerate(g.item_adj) for u in users}
        assert rebuilt_u == rebuilt_i == set(pairs)
        for items in g.user_adj:
            assert list(items) == sorted(items)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            InteractionGraph(1, 1, [(0, 1)])

    def test_has_edges(self):
        g = InteractionGraph(3, 3, [(0, 1), (2, 2)])
        assert g.has_edges([0, 0, 2, 1], [1, 0, 2, 1]).tolist() == [True, False, True, False]

    def test_id_map_bijection(self):
        g = parse_interactions(["a 1", "b 2", "c 1"])
        assert len(set(g.user_index.values())) == g.num_users
        assert all(g.user_ids[k] == raw for raw, k in g.user_index.items())


class TestSplit:
    def _regular(self):
        # 10 users of degree 10 over 20 items
        pairs = [(u, (u + k) % 20) for u in range(10) for k in range(10)]
        return InteractionGraph(10, 20, pairs)

    def test_test_count(self):
        train, test = split_train_test(self._regular(), 0.2, seed=3)
        assert test.num_edges == 20
        assert train.num_edges == 80

    def test_partition_and_determinism(self):
        g = self._regular()
        a = split_train_test(g, 0.3, seed=7)
        b = split_train_test(g, 0.3, seed=7)
        assert a[0].edge_set() == b[0].edge_set() and a[1].edge_set() == b[1].edge_set()
        assert a[0].edge_set() | a[1].edge_set() == g.edge_set()
        assert not a[0].edge_set() & a[1].edge_set()

    def test_degree_one_user_stays_in_train(self):
        g = InteractionGraph(2, 3, [(0, 0), (1, 0), (1, 1), (1, 2)])
        for seed in range(20):
            train, test = split_train_test(g, 0.01, seed)
            assert (0, 0) in train.edge_set()

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            split_train_test(self._regular(), 0.0, 0)


class TestNormalizedAdjacency:
    def test_single_edge(self):
        adj = build_normalized_adjacency(InteractionGraph(1, 1, [(0, 0)]))
        assert adj.lookup(0, 1) == 1.0 and adj.lookup(1, 0) == 1.0

    def test_star(self):
        adj = build_normalized_adjacency(InteractionGraph(1, 4, [(0, i) for i in range(4)]))
        assert all(adj.lookup(0, 1 + i) == 0.5 for i in range(4))

    def test_degree_zero_rows_empty(self):
        adj = build_normalized_adjacency(InteractionGraph(3, 3, [(0, 0)]))
        counts = np.diff(adj.indptr)
        assert counts.tolist() == [1, 0, 0, 1, 0, 0]
        assert np.all(np.isfinite(adj.data))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_dense_oracle(self, seed):
        rng = np.random.default_rng(seed)
        g = random_graph(rng, 4, 4, 0.5)
        adj = build_normalized_adjacency(g)
        np.testing.assert_allclose(adj.to_dense(), dense_normalized_adjacency(g), atol=1e-15)

    def test_symmetric_positive_pattern(self, rng):
        g = random_graph(rng, 15, 20, 0.2)
        adj = build_normalized_adjacency(g)
        rows, cols, vals = adj.entries()
        assert np.all(vals > 0)
        for r, c, v in zip(rows, cols, vals):
            assert adj.lookup(c, r) == v
        pattern = {(int(r), int(c)) for r, c in zip(rows, cols)}
        expected = {(int(u), 15 + int(i)) for u, i in g.edges}
        expected |= {(c, r) for r, c in expected}
        assert pattern == expected


class TestSpmm:
    def test_empty_pattern(self, backend):
        adj = build_normalized_adjacency(InteractionGraph(2, 2, []))
        np.testing.assert_array_equal(spmm(adj, np.ones((4, 3))), np.zeros((4, 3)))

    def test_dense_oracle(self, backend, rng):
        g = random_graph(rng, 3, 3, 0.6)
        adj = build_normalized_adjacency(g)
        x = rng.normal(size=(6, 5))
        np.testing.assert_allclose(spmm(adj, x), dense_normalized_adjacency(g) @ x, rtol=0, atol=1e-12)

    def test_linearity(self, backend, rng):
        adj = build_normalized_adjacency(random_graph(rng, 20, 30, 0.1))
        x, y = rng.normal(size=(2, 50, 4))
        a, b = 1.7, -0.3
        np.testing.assert_allclose(spmm(adj, a * x + b * y), a * spmm(adj, x) + b * spmm(adj, y),
                                   atol=1e-10)

    def test_ones_vector_row_sums(self, backend, rng):
        g = random_graph(rng, 10, 12, 0.3)
        adj = build_normalized_adjacency(g)
        got = spmm(adj, np.ones(22))
        deg = np.concatenate([g.user_degrees(), g.item_degrees()]).astype(float)
        for u in range(10):
            want = sum(1 / np.sqrt(deg[u] * deg[10 + i]) for i in g.user_adj[u])
            assert abs(got[u] - want) < 1e-12
        for i in range(12):
            want = sum(1 / np.sqrt(deg[10 + i] * deg[u]) for u in g.item_adj[i])
            assert abs(got[10 + i] - want) < 1e-12

    def test_dimension_mismatch(self):
        adj = build_normalized_adjacency(InteractionGraph(1, 1, [(0, 0)]))
        with pytest.raises(ValueError, match="dimension"):
            spmm(adj, np.ones((3, 2)))

    def test_backends_agree(self, rng):
        from sgcl import kernels

        adj = build_normalized_adjacency(random_graph(rng, 40, 50, 0.1))
        x = rng.normal(size=(90, 8))
        outs = [impl.csr_spmm(adj.indptr, adj.indices, adj.data, x)
                for impl in kernels.available_backends().values()]
        for o in outs[1:]:
            np.testing.assert_allclose(o, outs[0], atol=1e-12)
