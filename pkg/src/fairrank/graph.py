"""Directed graph, group bookkeeping and degree-class partitioning."""

import hashlib
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, DuplicateEdge, EmptyGraph
from .logging_config import get_logger

logger = get_logger(__name__)


class Group(Enum):
    """Binary group label of a node.

    Attributes:
        UNPROTECTED: Majority / unprotected group (label 0 on disk).
        PROTECTED: Protected group (label 1 on disk).
    """

    UNPROTECTED = 0
    PROTECTED = 1


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class DirectedGraph:
    """Immutable sparse directed graph with forward and reverse adjacency.

    Node ids are dense in ``[0, node_count)``. Adjacency is stored as CSR
    (``adjacency[j, i] == 1`` iff ``j -> i``) with each row sorted, so
    successor and predecessor lists come back in ascending id order.
    Use :func:`build_graph` rather than calling the constructor directly.
    """

    def __init__(self, node_count: int, sources: np.ndarray, targets: np.ndarray) -> None:
        """Initialize from canonical (sorted, duplicate-free) edge arrays.

        Args:
            node_count: Number of nodes N.
            sources: Edge sources sorted by (source, target).
            targets: Edge targets in the same order.
        """
        self.node_count = int(node_count)
        self.edge_count = int(sources.shape[0])
        self._sources = _frozen(np.ascontiguousarray(sources, dtype=np.int64))
        self._targets = _frozen(np.ascontiguousarray(targets, dtype=np.int64))

        n = self.node_count
        self.out_degree = _frozen(np.bincount(self._sources, minlength=n).astype(np.int64))
        self.in_degree = _frozen(np.bincount(self._targets, minlength=n).astype(np.int64))

        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.out_degree, out=out_indptr[1:])
        self._out_indptr = _frozen(out_indptr)

        # Stable sort by target keeps predecessors in ascending source order.
        order = np.argsort(self._targets, kind="stable")
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(self.in_degree, out=in_indptr[1:])
        self._in_indptr = _frozen(in_indptr)
        self._in_indices = _frozen(self._sources[order])

    def __repr__(self) -> str:
        return f"DirectedGraph(node_count={self.node_count}, edge_count={self.edge_count})"

    @property
    def sources(self) -> np.ndarray:
        """Edge sources, sorted by (source, target)."""
        return self._sources

    @property
    def targets(self) -> np.ndarray:
        """Edge targets, aligned with :attr:`sources`."""
        return self._targets

    def successors(self, node: int) -> np.ndarray:
        """Return the ordered successor ids of ``node``."""
        return self._targets[self._out_indptr[node] : self._out_indptr[node + 1]]

    def predecessors(self, node: int) -> np.ndarray:
        """Return the ordered predecessor ids of ``node``."""
        return self._in_indices[self._in_indptr[node] : self._in_indptr[node + 1]]

    def out_adjacency(self) -> list[list[int]]:
        """Per-node successor lists."""
        return [self.successors(i).tolist() for i in range(self.node_count)]

    def in_adjacency(self) -> list[list[int]]:
        """Per-node predecessor lists."""
        return [self.predecessors(i).tolist() for i in range(self.node_count)]

    def edge_array(self) -> np.ndarray:
        """Return the edges as an ``(M, 2)`` array of (source, target)."""
        return np.column_stack((self._sources, self._targets))

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Structural adjacency matrix, ``A[j, i] = 1`` iff ``j -> i``."""
        data = np.ones(self.edge_count, dtype=np.float64)
        return sp.csr_matrix(
            (data, self._targets, self._out_indptr),
            shape=(self.node_count, self.node_count),
        )

    @cached_property
    def dangling_mask(self) -> np.ndarray:
        """Boolean mask of nodes with out-degree 0."""
        return _frozen(self.out_degree == 0)

    @cached_property
    def transition_transpose(self) -> sp.csr_matrix:
        """Sparse ``T`` with ``T[i, j] = 1 / k_out(j)`` for every edge ``j -> i``.

        Dangling rows are not materialized; callers add the uniform
        correction for walkers sitting on dangling nodes.
        """
        weights = 1.0 / self.out_degree[self._in_indices]
        return sp.csr_matrix(
            (weights, self._in_indices, self._in_indptr),
            shape=(self.node_count, self.node_count),
        )

    @cached_property
    def fingerprint(self) -> str:
        """Stable SHA-256 digest of the node count and canonical edge arrays."""
        digest = hashlib.sha256()
        digest.update(np.int64(self.node_count).tobytes())
        digest.update(self._sources.tobytes())
        digest.update(self._targets.tobytes())
        return digest.hexdigest()

    def reversed(self) -> "DirectedGraph":
        """Return the graph with every edge flipped (built from in-adjacency)."""
        return build_graph(
            np.column_stack((self._targets, self._sources)), node_count=self.node_count
        )


def build_graph(
    edges: Iterable[Sequence[int]] | np.ndarray,
    node_count: int | None = None,
    dedup: bool = False,
) -> DirectedGraph:
    """Build a directed graph from (source, target) pairs.

    Self-loops are kept and count toward both degrees.

    Args:
        edges: Iterable of (source id, target id) pairs, ids nonnegative.
        node_count: Explicit N; defaults to ``max id + 1``.
        dedup: Silently drop repeated edges instead of raising.

    Returns:
        The constructed DirectedGraph.

    Raises:
        EmptyGraph: If the graph would have no nodes.
        DuplicateEdge: If an edge repeats and ``dedup`` is False.
        ValueError: If an id is negative or not below ``node_count``.
    """
    arr = np.asarray(edges if isinstance(edges, np.ndarray) else list(edges), dtype=np.int64)
    arr = arr.reshape(-1, 2)

    if arr.size and arr.min() < 0:
        raise ValueError("node ids must be nonnegative")

    max_id = int(arr.max()) if arr.size else -1
    n = max_id + 1 if node_count is None else int(node_count)
    if max_id >= n:
        raise ValueError(f"node id {max_id} out of range for node_count={n}")
    if n <= 0:
        raise EmptyGraph("graph has no nodes")

    sources = arr[:, 0]
    targets = arr[:, 1]
    keys = sources * n + targets
    order = np.argsort(keys, kind="stable")
    keys = keys[order]

    repeated = np.flatnonzero(keys[1:] == keys[:-1]) + 1
    if repeated.size:
        if not dedup:
            key = int(keys[repeated[0]])
            raise DuplicateEdge(key // n, key % n)
        logger.warning("Dropped duplicate edges", duplicates=int(repeated.size))
        keys = np.delete(keys, repeated)

    return DirectedGraph(n, keys // n, keys % n)


def dangling_nodes(g: DirectedGraph) -> set[int]:
    """Return the ids of nodes with out-degree 0."""
    return {int(i) for i in np.flatnonzero(g.dangling_mask)}


@dataclass(frozen=True, eq=False)
class GroupAssignment:
    """Per-node binary group labels with derived aggregates.

    Attributes:
        protected: Boolean mask, True for protected nodes.
        phi: Fraction of protected nodes.
        d_protected: Total in-degree D_P of protected nodes.
        d_unprotected: Total in-degree D_U of unprotected nodes.
    """

    protected: np.ndarray
    phi: float
    d_protected: int
    d_unprotected: int

    @classmethod
    def from_labels(
        cls, labels: Sequence[int | bool | Group] | np.ndarray, graph: DirectedGraph
    ) -> "GroupAssignment":
        """Create an assignment from per-node labels.

        Args:
            labels: One label per node; 1/True/Group.PROTECTED mean protected.
            graph: Graph the labels belong to.

        Returns:
            GroupAssignment for ``graph``.

        Raises:
            DimensionMismatch: If the label count differs from N.
        """
        values = [
            lab.value if isinstance(lab, Group) else lab
            for lab in (labels.tolist() if isinstance(labels, np.ndarray) else labels)
        ]
        mask = np.asarray(values, dtype=np.int64).reshape(-1)
        if mask.shape[0] != graph.node_count:
            raise DimensionMismatch(graph.node_count, mask.shape[0], "label vector")
        if np.any((mask != 0) & (mask != 1)):
            raise ValueError("group labels must be 0 or 1")
        protected = _frozen(mask.astype(bool))

        d_protected = int(graph.in_degree[protected].sum())
        return cls(
            protected=protected,
            phi=float(protected.sum()) / graph.node_count,
            d_protected=d_protected,
            d_unprotected=graph.edge_count - d_protected,
        )

    @property
    def d_total(self) -> int:
        """D_P + D_U, equal to the edge count M."""
        return self.d_protected + self.d_unprotected

    @property
    def node_count(self) -> int:
        return int(self.protected.shape[0])

    @property
    def protected_count(self) -> int:
        return int(self.protected.sum())

    @property
    def unprotected_count(self) -> int:
        return self.node_count - self.protected_count

    def label(self, node: int) -> Group:
        """Return the group of ``node``."""
        return Group.PROTECTED if self.protected[node] else Group.UNPROTECTED

    def as_int(self) -> np.ndarray:
        """Labels as 0/1 integers."""
        return self.protected.astype(np.int64)


def degree_class_index(
    in_degree: np.ndarray, out_degree: np.ndarray, protected: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Group nodes by exact (k_in, k_out, group) triples.

    Args:
        in_degree: Per-node in-degree.
        out_degree: Per-node out-degree.
        protected: Per-node protected mask (or 0/1 labels).

    Returns:
        Tuple of (keys, membership): lexicographically sorted ``(C, 3)`` class
        keys and the class index of every node.
    """
    k_in = np.asarray(in_degree, dtype=np.int64).reshape(-1)
    k_out = np.asarray(out_degree, dtype=np.int64).reshape(-1)
    label = np.asarray(protected, dtype=np.int64).reshape(-1)
    if k_in.size == 0:
        return np.empty((0, 3), dtype=np.int64), np.empty(0, dtype=np.int64)
    # One int64 per node; the packing preserves lexicographic order of the triples.
    out_span = int(k_out.max()) + 1
    packed = (k_in * out_span + k_out) * 2 + label
    codes, membership = np.unique(packed, return_inverse=True)
    pairs, group = np.divmod(codes, 2)
    keys = np.column_stack((pairs // out_span, pairs % out_span, group))
    return keys, membership.reshape(-1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class DegreeClassPartition:
    """Nodes aggregated into (k_in, k_out, group) degree classes.

    Attributes:
        keys: ``(C, 3)`` array of class keys (k_in, k_out, group).
        membership: Class index of every node.
        class_size: Node count per class.
        class_edge_counts: Sparse ``(C, C)`` matrix, entry ``[k', k]`` counts
            edges from members of class k' to members of class k.
    """

    keys: np.ndarray
    membership: np.ndarray
    class_size: np.ndarray
    class_edge_counts: sp.csr_matrix
    _lookup: dict[tuple[int, int, int], int] = field(repr=False, default_factory=dict)

    def __len__(self) -> int:
        return int(self.keys.shape[0])

    @property
    def node_count(self) -> int:
        return int(self.membership.shape[0])

    @property
    def class_probability(self) -> np.ndarray:
        """P(k) = class_size / N."""
        return self.class_size / self.node_count

    @property
    def classes(self) -> list[tuple[int, int, int]]:
        return [tuple(int(v) for v in row) for row in self.keys]

    @property
    def k_in(self) -> np.ndarray:
        return self.keys[:, 0]

    @property
    def k_out(self) -> np.ndarray:
        return self.keys[:, 1]

    @property
    def protected(self) -> np.ndarray:
        return self.keys[:, 2].astype(bool)

    def members(self, class_index: int) -> np.ndarray:
        """Return the node ids in class ``class_index`` (ascending)."""
        return np.flatnonzero(self.membership == class_index)

    def class_of(self, k_in: int, k_out: int, group: Group | int) -> int:
        """Return the class index for a key.

        Raises:
            KeyError: If no node has that key.
        """
        label = group.value if isinstance(group, Group) else int(group)
        return self._lookup[(int(k_in), int(k_out), label)]


def partition_degree_classes(g: DirectedGraph, groups: GroupAssignment) -> DegreeClassPartition:
    """Partition nodes into degree classes and count inter-class edges.

    Args:
        g: The graph.
        groups: Group labels covering every node of ``g``.

    Returns:
        The DegreeClassPartition.

    Raises:
        DimensionMismatch: If ``groups`` does not cover the graph.
    """
    if groups.node_count != g.node_count:
        raise DimensionMismatch(g.node_count, groups.node_count, "group assignment")

    keys, membership = degree_class_index(g.in_degree, g.out_degree, groups.protected)
    class_count = keys.shape[0]
    class_size = np.bincount(membership, minlength=class_count).astype(np.int64)

    edge_counts = sp.coo_matrix(
        (
            np.ones(g.edge_count, dtype=np.int64),
            (membership[g.sources], membership[g.targets]),
        ),
        shape=(class_count, class_count),
    ).tocsr()
    edge_counts.sum_duplicates()

    lookup = {tuple(int(v) for v in row): idx for idx, row in enumerate(keys)}
    logger.debug("Partitioned degree classes", classes=class_count, nodes=g.node_count)
    return DegreeClassPartition(
        keys=_frozen(keys),
        membership=_frozen(membership),
        class_size=_frozen(class_size),
        class_edge_counts=edge_counts,
        _lookup=lookup,
    )


def class_average(p: np.ndarray, part: DegreeClassPartition) -> np.ndarray:
    """Mean score per degree class, ``(1 / (N P(k))) * sum_{t in k} p(t)``.

    Args:
        p: Length-N score vector (ScoreVector or array).
        part: Degree-class partition.

    Returns:
        Per-class mean scores.

    Raises:
        DimensionMismatch: If ``len(p) != N``.
    """
    values = np.asarray(p, dtype=np.float64).reshape(-1)
    if values.shape[0] != part.node_count:
        raise DimensionMismatch(part.node_count, values.shape[0], "score vector")
    sums = np.bincount(part.membership, weights=values, minlength=len(part))
    return sums / part.class_size
