import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gflowgnn.errors import ConfigurationError, ParseError, ValidationError
from gflowgnn.graph import Splits, load_graph, neighbors, normalized_adjacency, save_graph, split_nodes
from gflowgnn.sbm import generate_sbm

from conftest import make_graph


def write_files(tmp_path, edges_text, features, labels, splits=None):
    (tmp_path / "edges.txt").write_text(edges_text)
    (tmp_path / "features.csv").write_text("\n".join(",".join(str(x) for x in row) for row in features) + "\n")
    (tmp_path / "labels.csv").write_text("\n".join(str(y) for y in labels) + "\n")
    sp = None
    if splits is not None:
        sp = tmp_path / "splits.json"
        sp.write_text(json.dumps(splits))
    return tmp_path / "edges.txt", tmp_path / "features.csv", tmp_path / "labels.csv", sp


class TestLoad:
    def test_smallest_instance(self, tmp_path):
        paths = write_files(tmp_path, "0 1\n", [[0.5], [1.5]], [0, 1])
        g = load_graph(*paths[:3], split=False)
        assert (g.n, g.C, g.d) == (2, 2, 1)
        assert g.adjacency.nnz == 2
        assert g.edge_list().tolist() == [[0, 1]]

    def test_duplicate_edges_are_merged(self, tmp_path):
        paths = write_files(tmp_path, "# comment\n0 1\n0 1\n\n", [[0.0], [1.0]], [0, 1])
        g = load_graph(*paths[:3], split=False)
        assert g.edge_list().tolist() == [[0, 1]]

    def test_both_directions_accepted(self, tmp_path):
        paths = write_files(tmp_path, "0 1\n1 0\n1 2\n2 1\n", [[0.0]] * 3, [0, 1, 0])
        g = load_graph(*paths[:3], split=False)
        assert g.edge_list().tolist() == [[0, 1], [1, 2]]

    def test_self_loops_ignored(self, tmp_path):
        paths = write_files(tmp_path, "0 0\n0 1\n", [[0.0], [1.0]], [0, 1])
        g = load_graph(*paths[:3], split=False)
        assert g.adjacency.diagonal().sum() == 0

    def test_label_out_of_range(self, tmp_path):
        paths = write_files(tmp_path, "0 1\n", [[0.0], [1.0]], [0, 2])
        with pytest.raises(ValidationError):
            load_graph(*paths[:3], num_classes=2, split=False)

    def test_malformed_line_reports_line_number(self, tmp_path):
        paths = write_files(tmp_path, "0 1\n1 x\n", [[0.0], [1.0]], [0, 1])
        with pytest.raises(ParseError) as exc:
            load_graph(*paths[:3], split=False)
        assert exc.value.line_no == 2

    def test_asymmetric_edge_list(self, tmp_path):
        paths = write_files(tmp_path, "0 1\n1 0\n1 2\n", [[0.0]] * 3, [0, 1, 0])
        with pytest.raises(ValidationError, match="asymmetric"):
            load_graph(*paths[:3], split=False)

    def test_splits_file(self, tmp_path):
        labels = [0, 1, 0, 1, 0, 1]
        edges = "0 1\n1 2\n2 3\n3 4\n4 5\n"
        paths = write_files(tmp_path, edges, [[float(i)] for i in range(6)], labels,
                            {"train": [0, 1], "valid": [2, 3], "test": [4, 5]})
        g = load_graph(*paths)
        assert g.splits.train.tolist() == [0, 1]

    def test_default_split_is_seeded(self, tmp_path):
        labels = [0, 1] * 10
        edges = "".join(f"{i} {i + 1}\n" for i in range(19))
        paths = write_files(tmp_path, edges, [[float(i)] for i in range(20)], labels)
        assert load_graph(*paths[:3]).splits == load_graph(*paths[:3]).splits

    def test_round_trip(self, tmp_path):
        g = generate_sbm(30, 3, 0.3, 0.05, d=4, seed=5)
        p = save_graph(g, tmp_path / "g")
        g2 = load_graph(p["edges"], p["features"], p["labels"], p["splits"], num_classes=g.C)
        assert g2 == g


class TestNeighbors:
    def test_path(self):
        g = make_graph([(0, 1), (1, 2)], 3)
        assert neighbors(g, 1) == [0, 2]

    def test_isolated(self):
        g = make_graph([(0, 1)], 3)
        assert neighbors(g, 2) == []

    def test_star(self):
        g = make_graph([(0, 3), (0, 1), (0, 2)], 4)
        assert neighbors(g, 0) == [1, 2, 3]

    def test_out_of_range(self):
        g = make_graph([(0, 1)], 2)
        with pytest.raises(IndexError):
            neighbors(g, 2)


class TestNormalizedAdjacency:
    def test_single_edge(self):
        g = make_graph([(0, 1)], 2)
        np.testing.assert_allclose(normalized_adjacency(g).toarray(), [[0.5, 0.5], [0.5, 0.5]])

    def test_isolated_node_row_is_unit(self):
        g = make_graph([(0, 1)], 3)
        np.testing.assert_array_equal(normalized_adjacency(g).toarray()[2], [0, 0, 1])

    def test_path_entry(self):
        g = make_graph([(0, 1), (1, 2)], 3)
        assert normalized_adjacency(g)[0, 1] == pytest.approx(1 / np.sqrt(2 * 3), abs=1e-12)
        assert normalized_adjacency(g)[0, 1] == pytest.approx(0.40825, abs=1e-5)

    def test_cached(self):
        g = make_graph([(0, 1)], 2)
        assert normalized_adjacency(g) is normalized_adjacency(g)


@st.composite
def random_edges(draw):
    n = draw(st.integers(1, 20))
    pairs = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=60))
    return n, pairs


@settings(max_examples=60, deadline=None)
@given(random_edges())
def test_normalized_adjacency_matches_dense(data):
    n, pairs = data
    g = make_graph(pairs, n)
    A = np.zeros((n, n))
    for u, v in pairs:
        if u != v:
            A[u, v] = A[v, u] = 1.0
    AI = A + np.eye(n)
    deg = AI.sum(axis=1)
    dense = np.array([[AI[i, j] / np.sqrt(deg[i] * deg[j]) for j in range(n)] for i in range(n)])
    got = normalized_adjacency(g).toarray()
    np.testing.assert_allclose(got, dense, atol=1e-14)
    np.testing.assert_allclose(got, got.T, atol=0)
    np.testing.assert_allclose(got.sum(axis=1), dense.sum(axis=1), atol=1e-12)
    for u in range(n):
        for v in neighbors(g, u):
            assert u in neighbors(g, v)
            assert v != u


class TestSplits:
    def test_sizes(self):
        s = split_nodes(np.array([0, 1] * 5), 2, 3, seed=1)
        assert (s.train.size, s.valid.size, s.test.size) == (5, 2, 3)
        assert not set(s.train) & set(s.valid) and not set(s.train) & set(s.test) and not set(s.valid) & set(s.test)

    def test_deterministic(self):
        labels = np.array([0, 1, 2] * 4)
        assert split_nodes(labels, 3, 3, seed=7) == split_nodes(labels, 3, 3, seed=7)

    def test_infeasible(self):
        with pytest.raises(ConfigurationError):
            split_nodes(np.zeros(10, dtype=int), 6, 6)

    def test_rare_class_lands_in_train(self):
        labels = np.array([0] * 9 + [1])
        s = split_nodes(labels, 4, 4, seed=0)
        assert 1 in labels[s.train]

    def test_coverage_unattainable(self):
        # two train slots cannot hold four classes
        with pytest.raises(ValidationError):
            split_nodes(np.array([0, 1, 2, 3]), 1, 1)

    def test_graph_requires_each_class_in_train(self):
        with pytest.raises(ValidationError):
            make_graph([(0, 1)], 4, labels=[0, 1, 0, 1], splits=Splits(train=[0, 2], valid=[1], test=[3]))

    def test_overlapping_splits_rejected(self):
        with pytest.raises(ValidationError):
            make_graph([(0, 1)], 4, labels=[0, 1, 0, 1], splits=Splits(train=[0, 1], valid=[1], test=[3]))
