import numpy as np
import pytest

from fogserve.errors import GraphFormatError
from fogserve.graph import (Cardinality, Graph, degree_cdf, generate_rmat,
                            load_graph, sample_subgraph, save_graph)


def path_graph(n, dim=2, seed=0):
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(n - 1)]
    return Graph(n, edges, rng.normal(size=(n, dim)))


class TestGraphInvariants:
    def test_basic_construction(self):
        g = Graph(3, [(0, 1), (1, 2)], np.zeros((3, 4)))
        assert g.vertex_count == 3
        assert g.num_edges == 2
        assert g.feature_dim == 4
        assert g.phi_bytes == 32

    def test_out_of_range_endpoint(self):
        with pytest.raises(GraphFormatError):
            Graph(3, [(0, 5)], np.zeros((3, 2)))

    def test_duplicate_edge(self):
        with pytest.raises(GraphFormatError):
            Graph(3, [(0, 1), (0, 1)], np.zeros((3, 2)))

    def test_self_loop(self):
        with pytest.raises(GraphFormatError):
            Graph(3, [(1, 1)], np.zeros((3, 2)))

    def test_feature_rows_must_match(self):
        with pytest.raises(GraphFormatError):
            Graph(3, [(0, 1)], np.zeros((2, 2)))

    def test_degree_sum_is_twice_edges(self):
        g = generate_rmat(200, 0.05, 4, 3, seed=7)
        assert g.degrees().sum() == 2 * g.num_edges

    def test_neighbors_sorted(self):
        g = Graph(4, [(0, 3), (0, 1), (0, 2)], np.zeros((4, 1)))
        assert list(g.neighbors(0)) == [1, 2, 3]


class TestDegreeCdf:
    def test_three_vertex_path(self):
        cdf = degree_cdf(path_graph(3))
        assert cdf.prob_le(1) == pytest.approx(2 / 3)
        assert cdf.prob_le(2) == pytest.approx(1.0)
        assert cdf.max_degree == 2

    def test_edgeless(self):
        g = Graph(5, np.empty((0, 2)), np.zeros((5, 1)))
        cdf = degree_cdf(g)
        assert cdf.prob_le(0) == 1.0
        assert cdf.max_degree == 0

    def test_star(self):
        g = Graph(5, [(0, i) for i in range(1, 5)], np.zeros((5, 1)))
        cdf = degree_cdf(g)
        assert cdf.prob_le(1) == pytest.approx(4 / 5)
        assert cdf.prob_le(4) == pytest.approx(1.0)

    def test_monotone_and_limits(self):
        g = generate_rmat(300, 0.03, 2, 2, seed=1)
        cdf = degree_cdf(g)
        assert cdf.prob_lt(0) == 0.0
        assert cdf.prob_le(cdf.max_degree) == 1.0
        probs = [cdf.prob_le(d) for d in range(cdf.max_degree + 1)]
        assert all(b >= a for a, b in zip(probs, probs[1:]))

    def test_prob_lt_is_left_limit(self):
        g = path_graph(3)  # degrees 1, 2, 1
        cdf = degree_cdf(g)
        assert cdf.prob_lt(1) == 0.0
        assert cdf.prob_lt(2) == pytest.approx(2 / 3)
        assert cdf.prob_lt(3) == pytest.approx(1.0)


class TestFileRoundTrip:
    def test_round_trip_identity(self, tmp_path):
        g = generate_rmat(50, 0.1, 6, 4, seed=3)
        save_graph(g, tmp_path / "g")
        assert load_graph(tmp_path / "g") == g

    def test_round_trip_without_labels(self, tmp_path):
        g = Graph(3, [(0, 1), (1, 2)], np.random.default_rng(0).normal(size=(3, 2)))
        save_graph(g, tmp_path / "g")
        g2 = load_graph(tmp_path / "g")
        assert g2 == g and g2.labels is None

    def test_small_edge_file(self, tmp_path):
        g = Graph(3, [(0, 1), (1, 2)], np.arange(6, dtype=float).reshape(3, 2))
        save_graph(g, tmp_path / "g")
        text = (tmp_path / "g" / "edges.txt").read_text()
        assert text == "0 1\n1 2\n"

    def test_dangling_endpoint_rejected(self, tmp_path):
        g = Graph(3, [(0, 1)], np.zeros((3, 2)))
        save_graph(g, tmp_path / "g")
        (tmp_path / "g" / "edges.txt").write_text("0 1\n0 5\n")
        with pytest.raises(GraphFormatError):
            load_graph(tmp_path / "g")

    def test_directed_input_rejected(self, tmp_path):
        g = Graph(3, [(0, 1)], np.zeros((3, 2)))
        save_graph(g, tmp_path / "g")
        (tmp_path / "g" / "edges.txt").write_text("0 1\n1 0\n")
        with pytest.raises(GraphFormatError):
            load_graph(tmp_path / "g")

    def test_malformed_line(self, tmp_path):
        g = Graph(3, [(0, 1)], np.zeros((3, 2)))
        save_graph(g, tmp_path / "g")
        (tmp_path / "g" / "edges.txt").write_text("0 1\nnot an edge\n")
        with pytest.raises(GraphFormatError):
            load_graph(tmp_path / "g")


class TestRmat:
    def test_exact_edge_count(self):
        n, d = 500, 0.02
        g = generate_rmat(n, d, 4, 4, seed=11)
        assert g.num_edges == int(np.ceil(d * n * (n - 1) / 2))

    def test_determinism(self):
        a = generate_rmat(400, 0.01, 8, 4, seed=42)
        b = generate_rmat(400, 0.01, 8, 4, seed=42)
        assert np.array_equal(a.edges, b.edges)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_seed_changes_output(self):
        a = generate_rmat(400, 0.01, 8, 4, seed=1)
        b = generate_rmat(400, 0.01, 8, 4, seed=2)
        assert not np.array_equal(a.edges, b.edges)

    def test_20k_scale_matches_published_count(self):
        # 20K vertices at 0.1% density gives the 199K-edge benchmark graph
        n = 20_000
        target = int(np.ceil(0.001 * n * (n - 1) / 2))
        assert target == 199_990
        g = generate_rmat(n, 0.001, 4, 8, seed=5)
        assert g.num_edges == target

    def test_density_too_high_possible(self):
        # density just below 1 is allowed; the ceil may reach the bound
        g = generate_rmat(5, 0.95, 2, 2, seed=0)
        assert g.num_edges == int(np.ceil(0.95 * 10))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            generate_rmat(1, 0.5, 2, 2, seed=0)
        with pytest.raises(ValueError):
            generate_rmat(10, 0.0, 2, 2, seed=0)
        with pytest.raises(ValueError):
            generate_rmat(10, 1.0, 2, 2, seed=0)

    def test_labels_cover_classes(self):
        g = generate_rmat(300, 0.02, 4, 5, seed=9)
        assert g.labels.min() >= 0
        assert g.labels.max() < 5

    def test_zero_fraction(self):
        g = generate_rmat(200, 0.02, 16, 4, seed=3, zero_fraction=0.9)
        frac = np.mean(g.features == 0.0)
        assert frac > 0.8
        g2 = generate_rmat(200, 0.02, 16, 4, seed=3, zero_fraction=0.0)
        assert np.mean(g2.features == 0.0) == 0.0


class TestSampleSubgraph:
    def test_full_set_has_no_external_neighbors(self):
        g = generate_rmat(100, 0.05, 2, 2, seed=0)
        verts, card = sample_subgraph(g, Cardinality(100, 0), seed=1)
        assert verts.size == 100
        assert card == Cardinality(100, 0)

    def test_star_center(self):
        g = Graph(5, [(0, i) for i in range(1, 5)], np.zeros((5, 1)))
        nbrs = g.neighbor_union([0])
        assert list(nbrs) == [1, 2, 3, 4]
        assert g.cardinality_of([0]) == Cardinality(1, 4)

    def test_determinism(self):
        g = generate_rmat(200, 0.03, 2, 2, seed=0)
        v1, c1 = sample_subgraph(g, Cardinality(50, 0), seed=77)
        v2, c2 = sample_subgraph(g, Cardinality(50, 0), seed=77)
        assert np.array_equal(v1, v2) and c1 == c2

    def test_matches_bruteforce_union(self):
        g = generate_rmat(150, 0.04, 2, 2, seed=4)
        verts, card = sample_subgraph(g, Cardinality(40, 0), seed=8)
        vset = set(verts.tolist())
        union = set()
        for v in verts:
            union.update(g.neighbors(v).tolist())
        assert card.num_neighbors == len(union - vset)

    def test_oversized_target(self):
        g = path_graph(4)
        with pytest.raises(ValueError):
            sample_subgraph(g, Cardinality(10, 0), seed=0)

    def test_cardinality_bound(self):
        g = generate_rmat(120, 0.05, 2, 2, seed=2)
        _, card = sample_subgraph(g, Cardinality(30, 0), seed=3)
        assert card.num_neighbors <= g.vertex_count - card.num_vertices
