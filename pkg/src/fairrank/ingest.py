"""Edge-list and label ingestion, score and record file output.

Input files use one whitespace-separated record per line with ``#``
comments. Node ids may be arbitrary tokens; they are remapped to dense
indices in order of first appearance (edge file first, then label file).
"""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DuplicateEdge, ParseError
from .graph import DirectedGraph, GroupAssignment, build_graph
from .logging_config import get_logger
from .scores import ScoreVector

logger = get_logger(__name__)

OUTPUT_FORMATS = ("csv", "json")
SCORE_COLUMNS = ("node_id", "k_in", "k_out", "group", "score")


class NodeIdMap:
    """Bidirectional mapping between external node ids and dense indices."""

    def __init__(self) -> None:
        self._ids: list[str] = []
        self._index: dict[str, int] = {}

    def add(self, external: str) -> int:
        """Return the index of ``external``, assigning the next one if new."""
        index = self._index.get(external)
        if index is None:
            index = len(self._ids)
            self._index[external] = index
            self._ids.append(external)
        return index

    def index_of(self, external: str) -> int:
        return self._index[external]

    def external(self, index: int) -> str:
        return self._ids[index]

    def __contains__(self, external: str) -> bool:
        return external in self._index

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def ids(self) -> list[str]:
        return list(self._ids)


@dataclass
class Dataset:
    """A labelled graph loaded from disk."""

    graph: DirectedGraph
    groups: GroupAssignment
    ids: NodeIdMap


def _records(text: str) -> Iterable[tuple[int, list[str]]]:
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line_no, line.split()


def parse_edge_list(
    text: str, ids: NodeIdMap | None = None, source: str | None = None
) -> tuple[list[tuple[int, int]], NodeIdMap]:
    """Parse ``source<TAB>target`` lines.

    Args:
        text: File content.
        ids: Existing id map to extend; a new one when None.
        source: Name used in error messages.

    Returns:
        Tuple of (edges as dense index pairs, id map).

    Raises:
        ParseError: If a line does not hold exactly two ids.
    """
    ids = ids if ids is not None else NodeIdMap()
    edges: list[tuple[int, int]] = []
    for line_no, fields in _records(text):
        if len(fields) != 2:
            raise ParseError(f"expected 'source target', got {len(fields)} fields", source, line_no)
        edges.append((ids.add(fields[0]), ids.add(fields[1])))
    return edges, ids


def parse_labels(text: str, ids: NodeIdMap, source: str | None = None) -> np.ndarray:
    """Parse ``node_id<TAB>{0|1}`` lines into a label per mapped node.

    Ids not seen in the edge list are added to ``ids`` as isolated nodes.

    Raises:
        ParseError: On malformed lines, labels other than 0/1, conflicting
            duplicates, or any node left without a label.
    """
    assigned: dict[int, int] = {}
    for line_no, fields in _records(text):
        if len(fields) != 2:
            raise ParseError(f"expected 'node_id label', got {len(fields)} fields", source, line_no)
        if fields[1] not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, got {fields[1]!r}", source, line_no)
        node = ids.add(fields[0])
        label = int(fields[1])
        if assigned.setdefault(node, label) != label:
            raise ParseError(f"conflicting labels for node {fields[0]!r}", source, line_no)

    missing = [ids.external(i) for i in range(len(ids)) if i not in assigned]
    if missing:
        shown = ", ".join(missing[:5])
        raise ParseError(f"{len(missing)} node(s) without a label: {shown}", source)
    return np.array([assigned[i] for i in range(len(ids))], dtype=np.int64)


def load_dataset(edges_path: str | Path, labels_path: str | Path, dedup: bool = False) -> Dataset:
    """Read an edge list and a label file into a labelled graph.

    Raises:
        ParseError: On malformed input, missing labels or a duplicate edge
            when ``dedup`` is False.
    """
    edges_path, labels_path = Path(edges_path), Path(labels_path)
    try:
        edge_text = edges_path.read_text(encoding="utf-8")
        label_text = labels_path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read input: {e}") from e

    edges, ids = parse_edge_list(edge_text, source=str(edges_path))
    labels = parse_labels(label_text, ids, source=str(labels_path))
    if not len(ids):
        raise ParseError("input has no nodes", str(edges_path))
    try:
        graph = build_graph(edges, node_count=len(ids), dedup=dedup)
    except DuplicateEdge as e:
        raise ParseError(
            f"duplicate edge {ids.external(e.source)} -> {ids.external(e.target)} "
            "(use --dedup to drop repeats)",
            str(edges_path),
        ) from e
    groups = GroupAssignment.from_labels(labels, graph)
    logger.info(
        "Loaded dataset",
        nodes=graph.node_count,
        edges=graph.edge_count,
        protected=groups.protected_count,
    )
    return Dataset(graph=graph, groups=groups, ids=ids)


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{value:.17g}"


def _cell(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        return format_float(value)
    return value


def _json_value(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_records(
    path: str | Path, records: Sequence[Mapping[str, Any]], fmt: str = "csv"
) -> Path:
    """Write flat records as CSV (header + rows) or a JSON array.

    Returns:
        The path written.
    """
    if fmt not in OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {fmt!r}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        rows = [{k: _json_value(v) for k, v in record.items()} for record in records]
        path.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
        return path

    columns: list[str] = []
    for record in records:
        columns.extend(k for k in record if k not in columns)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow({k: _cell(v) for k, v in record.items()})
    return path


def score_records(
    ids: NodeIdMap, graph: DirectedGraph, groups: GroupAssignment, scores: ScoreVector
) -> list[dict[str, Any]]:
    """One (node_id, k_in, k_out, group, score) record per node."""
    return [
        {
            "node_id": ids.external(i),
            "k_in": int(graph.in_degree[i]),
            "k_out": int(graph.out_degree[i]),
            "group": int(groups.protected[i]),
            "score": float(scores[i]),
        }
        for i in range(graph.node_count)
    ]


def write_scores(
    path: str | Path,
    ids: NodeIdMap,
    graph: DirectedGraph,
    groups: GroupAssignment,
    scores: ScoreVector,
    fmt: str = "csv",
) -> Path:
    """Write a score file in node index order."""
    return write_records(path, score_records(ids, graph, groups, scores), fmt)


@dataclass
class ScoreTable:
    """Contents of a score file."""

    node_ids: list[str]
    k_in: np.ndarray
    k_out: np.ndarray
    group: np.ndarray
    scores: ScoreVector

    def __len__(self) -> int:
        return len(self.node_ids)

    def reorder(self, node_ids: Sequence[str]) -> "ScoreTable":
        """Rows rearranged to follow ``node_ids``."""
        position = {node: i for i, node in enumerate(self.node_ids)}
        order = np.array([position[node] for node in node_ids], dtype=np.int64)
        return ScoreTable(
            node_ids=list(node_ids),
            k_in=self.k_in[order],
            k_out=self.k_out[order],
            group=self.group[order],
            scores=ScoreVector(self.scores.scores[order]),
        )


def read_scores(path: str | Path) -> ScoreTable:
    """Read a CSV or JSON score file (format chosen by suffix).

    Raises:
        ParseError: If columns are missing, values are malformed, or the
            scores fail the normalization check.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read score file: {e}") from e

    if path.suffix == ".json":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e}", str(path), e.lineno) from e
        if not isinstance(rows, list):
            raise ParseError("score file must hold a JSON array", str(path))
    else:
        rows = list(csv.DictReader(text.splitlines()))

    if not rows:
        raise ParseError("score file is empty", str(path))
    missing = [c for c in SCORE_COLUMNS if c not in rows[0]]
    if missing:
        raise ParseError(f"missing columns: {', '.join(missing)}", str(path))
    try:
        node_ids = [str(row["node_id"]) for row in rows]
        k_in = np.array([int(row["k_in"]) for row in rows], dtype=np.int64)
        k_out = np.array([int(row["k_out"]) for row in rows], dtype=np.int64)
        group = np.array([int(row["group"]) for row in rows], dtype=np.int64)
        scores = ScoreVector(np.array([float(row["score"]) for row in rows]))
    except (TypeError, ValueError) as e:
        raise ParseError(f"invalid score record: {e}", str(path)) from e
    if len(set(node_ids)) != len(node_ids):
        raise ParseError("duplicate node ids", str(path))
    return ScoreTable(node_ids=node_ids, k_in=k_in, k_out=k_out, group=group, scores=scores)
