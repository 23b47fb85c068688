"""Tests for graph construction, group labels and degree classes."""

import numpy as np
import pytest

from fairrank.errors import DimensionMismatch, DuplicateEdge, EmptyGraph
from fairrank.graph import (
    Group,
    GroupAssignment,
    build_graph,
    class_average,
    dangling_nodes,
    degree_class_index,
    partition_degree_classes,
)
from fairrank.scores import FairnessSpec, ScoreVector, SolverReport, protected_mass

EDGES = [(0, 1), (0, 2), (1, 2), (2, 0), (3, 2), (4, 3), (4, 5)]


@pytest.fixture
def graph():
    """Six nodes; node 5 is dangling."""
    return build_graph(EDGES)


@pytest.fixture
def groups(graph):
    return GroupAssignment.from_labels([1, 0, 0, 1, 0, 1], graph)


class TestBuildGraph:
    """Tests for build_graph and DirectedGraph."""

    def test_degrees(self, graph):
        assert graph.node_count == 6
        assert graph.edge_count == 7
        assert graph.out_degree.tolist() == [2, 1, 1, 1, 2, 0]
        assert graph.in_degree.tolist() == [1, 1, 3, 1, 0, 1]

    def test_adjacency_lists_are_sorted(self):
        """Test that successors and predecessors come back in id order."""
        g = build_graph([(2, 0), (1, 0), (0, 2), (0, 1)])

        assert g.successors(0).tolist() == [1, 2]
        assert g.predecessors(0).tolist() == [1, 2]
        assert g.out_adjacency() == [[1, 2], [0], [0]]
        assert g.in_adjacency() == [[1, 2], [0], [0]]

    def test_dangling_nodes(self, graph):
        assert dangling_nodes(graph) == {5}
        assert graph.dangling_mask.tolist() == [False] * 5 + [True]

    def test_isolated_nodes_from_node_count(self):
        g = build_graph([(0, 1)], node_count=4)

        assert g.node_count == 4
        assert dangling_nodes(g) == {1, 2, 3}

    def test_self_loop_counts_toward_both_degrees(self):
        g = build_graph([(0, 0), (0, 1)])

        assert g.out_degree.tolist() == [2, 0]
        assert g.in_degree.tolist() == [1, 1]

    def test_duplicate_edge_raises(self):
        with pytest.raises(DuplicateEdge, match="duplicate edge 0 -> 1"):
            build_graph([(0, 1), (1, 0), (0, 1)])

    def test_duplicate_edge_dropped_with_dedup(self):
        g = build_graph([(0, 1), (1, 0), (0, 1)], dedup=True)

        assert g.edge_count == 2

    def test_empty_graph_raises(self):
        with pytest.raises(EmptyGraph):
            build_graph([])

    def test_id_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            build_graph([(0, 5)], node_count=3)

    def test_negative_id(self):
        with pytest.raises(ValueError, match="nonnegative"):
            build_graph([(-1, 0)])

    def test_transition_columns_are_stochastic(self, graph):
        """Test that non-dangling columns of the transition matrix sum to one."""
        sums = np.asarray(graph.transition_transpose.sum(axis=0)).reshape(-1)

        np.testing.assert_allclose(sums[:5], 1.0)
        assert sums[5] == 0.0

    def test_arrays_are_read_only(self, graph):
        with pytest.raises(ValueError):
            graph.out_degree[0] = 7

    def test_fingerprint_ignores_input_order(self, graph):
        shuffled = build_graph(list(reversed(EDGES)))

        assert shuffled.fingerprint == graph.fingerprint
        assert build_graph(EDGES[:-1], node_count=6).fingerprint != graph.fingerprint

    def test_reversed(self, graph):
        rev = graph.reversed()

        assert rev.out_degree.tolist() == graph.in_degree.tolist()
        assert rev.successors(2).tolist() == [0, 1, 3]


class TestGroupAssignment:
    """Tests for GroupAssignment."""

    def test_aggregates(self, groups):
        assert groups.phi == pytest.approx(0.5)
        assert groups.d_protected == 3
        assert groups.d_unprotected == 4
        assert groups.d_total == 7
        assert groups.protected_count == 3
        assert groups.unprotected_count == 3

    def test_accepts_enum_labels(self, graph):
        labels = [Group.PROTECTED] + [Group.UNPROTECTED] * 5

        groups = GroupAssignment.from_labels(labels, graph)

        assert groups.label(0) is Group.PROTECTED
        assert groups.label(1) is Group.UNPROTECTED
        assert groups.as_int().tolist() == [1, 0, 0, 0, 0, 0]

    def test_length_mismatch(self, graph):
        with pytest.raises(DimensionMismatch):
            GroupAssignment.from_labels([0, 1], graph)

    def test_rejects_other_labels(self, graph):
        with pytest.raises(ValueError, match="0 or 1"):
            GroupAssignment.from_labels([0, 1, 2, 0, 0, 0], graph)


class TestDegreeClasses:
    """Tests for the (k_in, k_out, group) partition."""

    def test_every_node_in_exactly_one_class(self, graph, groups):
        part = partition_degree_classes(graph, groups)

        assert part.class_size.sum() == graph.node_count
        assert np.isclose(part.class_probability.sum(), 1.0)
        for idx in range(len(part)):
            for node in part.members(idx):
                key = (graph.in_degree[node], graph.out_degree[node], groups.as_int()[node])
                assert part.classes[idx] == tuple(int(v) for v in key)

    def test_shared_class(self):
        """Test that nodes with equal degrees and group share a class."""
        g = build_graph([(0, 1), (1, 0), (2, 3), (3, 2)])
        groups = GroupAssignment.from_labels([0, 0, 0, 1], g)

        part = partition_degree_classes(g, groups)

        assert len(part) == 2
        shared = part.class_of(1, 1, Group.UNPROTECTED)
        assert part.members(shared).tolist() == [0, 1, 2]
        with pytest.raises(KeyError):
            part.class_of(2, 1, 0)

    def test_class_edge_counts_total_edges(self, graph, groups):
        part = partition_degree_classes(graph, groups)

        assert part.class_edge_counts.sum() == graph.edge_count

    def test_class_average(self, graph, groups):
        part = partition_degree_classes(graph, groups)
        p = np.arange(1, 7, dtype=float)

        means = class_average(p, part)

        for idx in range(len(part)):
            assert means[idx] == pytest.approx(p[part.members(idx)].mean())

    def test_class_average_length_mismatch(self, graph, groups):
        part = partition_degree_classes(graph, groups)

        with pytest.raises(DimensionMismatch):
            class_average(np.ones(3), part)

    def test_class_index_matches_row_unique(self):
        rng = np.random.default_rng(11)
        k_in = rng.integers(0, 40, size=3000)
        k_out = rng.integers(0, 25, size=3000)
        label = rng.integers(0, 2, size=3000)

        keys, membership = degree_class_index(k_in, k_out, label)

        expected, inverse = np.unique(
            np.column_stack((k_in, k_out, label)), axis=0, return_inverse=True
        )
        np.testing.assert_array_equal(keys, expected)
        np.testing.assert_array_equal(membership, inverse.reshape(-1))


class TestScores:
    """Tests for ScoreVector, FairnessSpec and SolverReport."""

    def test_score_vector_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sums to"):
            ScoreVector(np.array([0.5, 0.6]))

    def test_score_vector_rejects_negative(self):
        with pytest.raises(ValueError, match="negative"):
            ScoreVector(np.array([1.5, -0.5]))

    def test_normalized_clips_round_off(self):
        scores = ScoreVector.normalized(np.array([2.0, 2.0, -1e-15]))

        assert scores.scores.tolist() == [0.5, 0.5, 0.0]

    def test_protected_mass(self, groups):
        p = ScoreVector(np.full(6, 1 / 6))

        assert protected_mass(p, groups) == pytest.approx(0.5)

    def test_protected_mass_length_mismatch(self, groups):
        with pytest.raises(DimensionMismatch):
            protected_mass(np.ones(4) / 4, groups)

    def test_target_defaults_to_phi(self, groups):
        assert FairnessSpec().resolve_target(groups) == pytest.approx(0.5)
        assert FairnessSpec(target=0.2).resolve_target(groups) == 0.2

    @pytest.mark.parametrize("kwargs", [{"nu": 0.0}, {"nu": 1.2}, {"target": 1.5}])
    def test_invalid_fairness_spec(self, kwargs):
        with pytest.raises(ValueError):
            FairnessSpec(**kwargs)

    def test_report_to_dict_flattens_extra(self):
        report = SolverReport(
            "gmres", residual_history=(1.0, 0.1), extra={"theta": np.float64(0.25)}
        )

        record = report.to_dict()

        assert record["method"] == "gmres"
        assert record["residual_history_length"] == 2
        assert record["theta"] == 0.25
        assert type(record["theta"]) is float
