"""Tests for input parsing and score file output."""

import json

import numpy as np
import pytest

from fairrank.errors import ParseError
from fairrank.graph import GroupAssignment, build_graph
from fairrank.ingest import (
    NodeIdMap,
    format_float,
    load_dataset,
    parse_edge_list,
    parse_labels,
    read_scores,
    write_records,
    write_scores,
)
from fairrank.scores import ScoreVector

EDGE_TEXT = """# source target
alice\tbob
bob\tcarol
carol\talice   # closing the triangle
carol\tdave
"""
LABEL_TEXT = "alice\t1\nbob\t0\ncarol\t0\ndave\t1\nerin\t1\n"


@pytest.fixture
def dataset_files(tmp_path):
    edges = tmp_path / "edges.tsv"
    labels = tmp_path / "labels.tsv"
    edges.write_text(EDGE_TEXT)
    labels.write_text(LABEL_TEXT)
    return edges, labels


class TestParsing:
    """Tests for the edge-list and label parsers."""

    def test_ids_in_first_appearance_order(self):
        edges, ids = parse_edge_list(EDGE_TEXT)

        assert ids.ids == ["alice", "bob", "carol", "dave"]
        assert edges == [(0, 1), (1, 2), (2, 0), (2, 3)]

    def test_wrong_field_count(self):
        with pytest.raises(ParseError, match="edges.tsv:2: expected 'source target'"):
            parse_edge_list("a b\na b c\n", source="edges.tsv")

    def test_labels_add_isolated_nodes(self):
        _, ids = parse_edge_list(EDGE_TEXT)

        labels = parse_labels(LABEL_TEXT, ids)

        assert labels.tolist() == [1, 0, 0, 1, 1]
        assert "erin" in ids

    def test_bad_label(self):
        with pytest.raises(ParseError, match="label must be 0 or 1"):
            parse_labels("a\t2\n", NodeIdMap())

    def test_conflicting_labels(self):
        with pytest.raises(ParseError, match="conflicting labels"):
            parse_labels("a 1\na 0\n", NodeIdMap())

    def test_missing_label(self):
        _, ids = parse_edge_list("a b\n")

        with pytest.raises(ParseError, match="1 node\\(s\\) without a label: b"):
            parse_labels("a 1\n", ids)


class TestLoadDataset:
    """Tests for load_dataset."""

    def test_load(self, dataset_files):
        dataset = load_dataset(*dataset_files)

        assert dataset.graph.node_count == 5
        assert dataset.graph.edge_count == 4
        assert dataset.groups.protected_count == 3
        assert dataset.ids.index_of("erin") == 4

    def test_duplicate_edge_is_a_parse_error(self, dataset_files):
        edges, labels = dataset_files
        edges.write_text(EDGE_TEXT + "alice bob\n")

        with pytest.raises(ParseError, match="duplicate edge alice -> bob") as excinfo:
            load_dataset(edges, labels)

        assert excinfo.value.exit_code == 2

    def test_dedup(self, dataset_files):
        edges, labels = dataset_files
        edges.write_text(EDGE_TEXT + "alice bob\n")

        assert load_dataset(edges, labels, dedup=True).graph.edge_count == 4

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError, match="cannot read input"):
            load_dataset(tmp_path / "nope.tsv", tmp_path / "labels.tsv")


class TestScoreFiles:
    """Tests for writing and reading score files."""

    @pytest.fixture
    def ranked(self):
        g = build_graph([(0, 1), (1, 2), (2, 0), (0, 2)])
        groups = GroupAssignment.from_labels([1, 0, 0], g)
        ids = NodeIdMap()
        for name in ("x", "y", "z"):
            ids.add(name)
        scores = ScoreVector(np.array([0.1, 0.2, 0.7]))
        return ids, g, groups, scores

    def test_format_float_round_trips(self):
        value = 0.1 + 0.2

        assert float(format_float(value)) == value

    def test_csv_layout(self, tmp_path, ranked):
        path = write_scores(tmp_path / "scores.csv", *ranked)

        lines = path.read_text().splitlines()
        assert lines[0] == "node_id,k_in,k_out,group,score"
        assert lines[1] == "x,1,2,1,0.10000000000000001"

    @pytest.mark.parametrize("suffix", ["csv", "json"])
    def test_read_back(self, tmp_path, ranked, suffix):
        path = write_scores(tmp_path / f"scores.{suffix}", *ranked, fmt=suffix)

        table = read_scores(path)

        assert table.node_ids == ["x", "y", "z"]
        assert table.k_in.tolist() == [1, 1, 2]
        assert table.group.tolist() == [1, 0, 0]
        assert table.scores.scores.tolist() == [0.1, 0.2, 0.7]

    def test_reorder(self, tmp_path, ranked):
        table = read_scores(write_scores(tmp_path / "scores.csv", *ranked))

        reordered = table.reorder(["z", "x", "y"])

        assert reordered.scores.scores.tolist() == [0.7, 0.1, 0.2]
        assert reordered.k_out.tolist() == [1, 2, 1]

    def test_json_nan_becomes_null(self, tmp_path):
        path = write_records(tmp_path / "report.json", [{"pearson": float("nan")}], "json")

        assert json.loads(path.read_text()) == [{"pearson": None}]

    def test_missing_column(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("node_id,score\na,1.0\n")

        with pytest.raises(ParseError, match="missing columns: k_in, k_out, group"):
            read_scores(path)

    def test_unnormalized_scores(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("node_id,k_in,k_out,group,score\na,0,0,0,0.5\n")

        with pytest.raises(ParseError, match="invalid score record"):
            read_scores(path)
