"""Node statistics, walk operators, rewiring null, assortativity, sector shares."""

import numpy as np
import pytest

from skillbasin.graph_core import (
    assortativity,
    connected_components,
    node_stats,
    rewire_null,
    rewire_once,
    sector_edge_share,
    top_edges,
    walk_operators,
)

from conftest import network_from_adjacency, random_connected_network

PATH3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
TRIANGLE = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=float)
STAR4 = np.array(
    [[0, 1, 1, 1], [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]], dtype=float
)
K4 = 1.0 - np.eye(4)


class TestConnectedComponents:
    def test_path_is_one_component(self):
        comps = connected_components(PATH3)
        assert len(comps) == 1 and np.array_equal(comps[0], [0, 1, 2])

    def test_isolated_node_is_own_component(self):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 1.0
        comps = connected_components(a)
        assert [c.tolist() for c in comps] == [[0, 1], [2]]

    def test_two_triangles_split(self):
        a = np.zeros((6, 6))
        a[:3, :3] = TRIANGLE
        a[3:, 3:] = TRIANGLE
        comps = connected_components(a)
        assert [c.tolist() for c in comps] == [[0, 1, 2], [3, 4, 5]]


class TestNodeStats:
    def test_path_degrees_and_strengths(self):
        a = np.array([[0, 2.0, 0], [2.0, 0, 3.0], [0, 3.0, 0]])
        s = node_stats(network_from_adjacency(a))
        assert np.array_equal(s.degree, [1, 2, 1])
        assert np.array_equal(s.strength, [2.0, 5.0, 3.0])

    def test_complete_graph_centrality_uniform(self):
        s = node_stats(network_from_adjacency(K4))
        assert np.allclose(s.eigencentrality, 0.5, atol=1e-9)

    def test_star_centrality_closed_form(self):
        # hub-leaf eigenvector of K_{1,3}: hub sqrt(1/2), each leaf sqrt(1/6)
        s = node_stats(network_from_adjacency(STAR4))
        assert s.eigencentrality[0] == pytest.approx(np.sqrt(0.5), abs=1e-9)
        assert np.allclose(s.eigencentrality[1:], np.sqrt(1 / 6), atol=1e-9)

    def test_centrality_zero_off_largest_component(self):
        a = np.zeros((6, 6))
        a[:4, :4] = K4
        a[4, 5] = a[5, 4] = 1.0
        s = node_stats(network_from_adjacency(a))
        assert np.all(s.eigencentrality[4:] == 0.0)
        assert np.allclose(s.eigencentrality[:4], 0.5, atol=1e-9)

    def test_eigenvector_residual_small(self, rng):
        g = random_connected_network(12, rng)
        s = node_stats(g)
        v = s.eigencentrality
        lam = v @ g.adjacency @ v
        assert np.linalg.norm(g.adjacency @ v - lam * v) < 1e-8
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-9)

    def test_empty_graph_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            node_stats(network_from_adjacency(np.zeros((0, 0))))


class TestWalkOperators:
    def test_path_stationary_distribution(self):
        ops = walk_operators(network_from_adjacency(PATH3))
        assert np.allclose(ops.stationary, [0.25, 0.5, 0.25], atol=1e-15)

    def test_rows_sum_to_one(self, rng):
        ops = walk_operators(random_connected_network(10, rng))
        assert np.allclose(ops.transition.sum(axis=1), 1.0, atol=1e-12)

    def test_stationarity_identity(self, rng):
        ops = walk_operators(random_connected_network(15, rng))
        residual = ops.stationary @ ops.transition - ops.stationary
        assert np.abs(residual).max() < 1e-12

    def test_zero_degree_nodes_excluded(self):
        a = np.zeros((4, 4))
        a[0, 1] = a[1, 0] = 2.0
        ops = walk_operators(network_from_adjacency(a))
        assert ops.active.tolist() == [True, True, False, False]
        assert ops.n_active == 2
        assert ops.total_weight == pytest.approx(4.0)

    def test_edgeless_graph_rejected(self):
        with pytest.raises(ValueError, match="no positive-weight edges"):
            walk_operators(network_from_adjacency(np.zeros((3, 3))))


class TestRewire:
    def test_conserves_edge_count_and_total_weight(self, rng):
        g = random_connected_network(9, rng)
        before = sorted(w for _, _, w in g.edges())
        a = rewire_once(g, rng)
        assert np.array_equal(a, a.T)
        assert np.all(np.diag(a) == 0.0)
        after = sorted(a[i, j] for i in range(9) for j in range(i + 1, 9) if a[i, j] > 0)
        assert after == before  # the multiset of weights is moved, not altered

    def test_complete_graph_keeps_every_pair_occupied(self):
        # with all pairs used, rewiring can only permute the weight multiset
        a = rewire_once(network_from_adjacency(TRIANGLE), np.random.default_rng(0))
        assert (a > 0).sum() // 2 == 3

    def test_null_summary_conserves_mass(self, rng):
        g = random_connected_network(8, rng)
        total = sum(w for _, _, w in g.edges())
        summary = rewire_null(g, reps=50, seed=7)
        assert summary.replicates == 50
        # average strength histogram mass equals the node count
        assert summary.strength_hist.sum() == pytest.approx(8.0, abs=1e-9)
        assert summary.mean_strength.sum() == pytest.approx(2 * total, abs=1e-9)

    def test_null_deterministic_in_seed(self, rng):
        g = random_connected_network(6, rng)
        a = rewire_null(g, reps=10, seed=3)
        b = rewire_null(g, reps=10, seed=3)
        assert np.array_equal(a.strength_hist, b.strength_hist)
        assert np.array_equal(a.mean_strength, b.mean_strength)

    def test_reps_validated(self, rng):
        g = random_connected_network(5, rng)
        with pytest.raises(ValueError, match="reps"):
            rewire_null(g, reps=0)


class TestAssortativity:
    def brute_force_endpoint_pearson(self, values, adjacency):
        xs, ys = [], []
        n = adjacency.shape[0]
        for i in range(n):
            for j in range(n):
                if adjacency[i, j] > 0:
                    xs.append(values[i])
                    ys.append(values[j])
        return np.corrcoef(xs, ys)[0, 1]

    def test_matches_brute_force_pearson(self, rng):
        g = random_connected_network(10, rng)
        stats = node_stats(g)
        report = assortativity(g, stats)
        expected = self.brute_force_endpoint_pearson(stats.strength, g.adjacency)
        assert report.strength_coefficient == pytest.approx(expected, abs=1e-9)
        expected_deg = self.brute_force_endpoint_pearson(stats.degree, g.adjacency)
        assert report.degree_coefficient == pytest.approx(expected_deg, abs=1e-9)

    def test_star_is_disassortative(self):
        report = assortativity(network_from_adjacency(STAR4))
        assert report.degree_coefficient == pytest.approx(-1.0, abs=1e-9)

    def test_regular_graph_degenerate_nan(self):
        report = assortativity(network_from_adjacency(TRIANGLE))
        assert np.isnan(report.degree_coefficient)

    def test_neighbour_means(self):
        a = np.array([[0, 2.0, 0], [2.0, 0, 3.0], [0, 3.0, 0]])
        report = assortativity(network_from_adjacency(a))
        means = report.table["mean_neighbour_strength"].to_numpy()
        assert means[0] == pytest.approx(5.0)  # only neighbour is the middle node
        assert means[1] == pytest.approx(2.5)  # (2 + 3) / 2

    def test_isolated_node_neighbour_mean_nan(self):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 1.0
        report = assortativity(network_from_adjacency(a))
        assert np.isnan(report.table["mean_neighbour_strength"].iloc[2])


class TestSectorEdgeShare:
    def test_brute_force_small_case(self):
        # sectors S1 = {0, 1}, S2 = {2, 3}; edges 0-1, 0-2, 1-3
        a = np.zeros((4, 4))
        for i, j in [(0, 1), (0, 2), (1, 3)]:
            a[i, j] = a[j, i] = 1.0
        g = network_from_adjacency(a, index=("A", "B", "C", "D"))
        sectors = {"A": "S1", "B": "S1", "C": "S2", "D": "S2"}
        share = sector_edge_share(g, sectors)
        assert share.loc["S1", "S1"] == pytest.approx(1.0)  # 1 of 1 possible
        assert share.loc["S1", "S2"] == pytest.approx(0.5)  # 2 of 4 possible
        assert share.loc["S2", "S2"] == pytest.approx(0.0)
        assert share.loc["S2", "S1"] == share.loc["S1", "S2"]

    def test_singleton_sector_diagonal_nan(self):
        a = np.zeros((2, 2))
        a[0, 1] = a[1, 0] = 1.0
        g = network_from_adjacency(a, index=("A", "B"))
        share = sector_edge_share(g, {"A": "S1", "B": "S2"})
        assert np.isnan(share.loc["S1", "S1"]) and np.isnan(share.loc["S2", "S2"])
        assert share.loc["S1", "S2"] == pytest.approx(1.0)

    def test_unlabelled_industry_rejected(self):
        g = network_from_adjacency(PATH3, index=("A", "B", "C"))
        with pytest.raises(ValueError, match="without sector"):
            sector_edge_share(g, {"A": "S1", "B": "S1"})


class TestTopEdges:
    def test_orders_by_weight(self):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 0.2
        a[1, 2] = a[2, 1] = 0.9
        g = network_from_adjacency(a, index=("A", "B", "C"))
        table = top_edges(g, 1)
        assert list(table.iloc[0][["source", "target"]]) == ["B", "C"]
        assert table.iloc[0]["weight"] == pytest.approx(0.9)

    def test_ties_broken_lexicographically(self):
        a = np.zeros((4, 4))
        a[2, 3] = a[3, 2] = 0.5
        a[0, 1] = a[1, 0] = 0.5
        g = network_from_adjacency(a, index=("A", "B", "C", "D"))
        table = top_edges(g, 2)
        assert list(table["source"]) == ["A", "C"]

    def test_k_larger_than_edge_count(self):
        g = network_from_adjacency(PATH3)
        assert len(top_edges(g, 10)) == 2

    def test_k_validated(self):
        with pytest.raises(ValueError, match="k"):
            top_edges(network_from_adjacency(PATH3), 0)
