"""Synthetic two-group directed graphs from the directed configuration model.

In- and out-degree sequences are drawn independently, stubs are matched at
random and conflicting edges are rewired, so the resulting graphs have no
degree-degree correlations.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InfeasibleDegreeSequence, ParseError
from .graph import DirectedGraph, GroupAssignment, build_graph
from .logging_config import get_logger

logger = get_logger(__name__)

REWIRE_ATTEMPTS_PER_EDGE = 100
LAW_KINDS = ("powerlaw", "poisson", "regular")


@dataclass(frozen=True)
class DegreeLaw:
    """Degree distribution for one side of the configuration model.

    Attributes:
        kind: One of powerlaw, poisson, regular.
        exponent: Power-law exponent alpha (> 1).
        k_min: Smallest power-law degree.
        k_max: Largest power-law degree; None means N - 1.
        mean: Poisson mean.
        k: Regular degree.
    """

    kind: str
    exponent: float = 2.5
    k_min: int = 1
    k_max: int | None = None
    mean: float = 0.0
    k: int = 0

    def __post_init__(self) -> None:
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown degree law {self.kind!r}")
        if self.kind == "powerlaw":
            if not self.exponent > 1.0:
                raise ValueError(f"power-law exponent must be > 1, got {self.exponent}")
            if self.k_min < 1:
                raise ValueError(f"power-law k_min must be >= 1, got {self.k_min}")
            if self.k_max is not None and self.k_max < self.k_min:
                raise ValueError("power-law k_max must be >= k_min")
        if self.kind == "poisson" and self.mean < 0.0:
            raise ValueError(f"poisson mean must be >= 0, got {self.mean}")
        if self.kind == "regular" and self.k < 0:
            raise ValueError(f"regular degree must be >= 0, got {self.k}")

    @classmethod
    def powerlaw(cls, exponent: float, k_min: int = 1, k_max: int | None = None) -> "DegreeLaw":
        return cls("powerlaw", exponent=exponent, k_min=k_min, k_max=k_max)

    @classmethod
    def poisson(cls, mean: float) -> "DegreeLaw":
        return cls("poisson", mean=mean)

    @classmethod
    def regular(cls, k: int) -> "DegreeLaw":
        return cls("regular", k=k)

    @classmethod
    def parse(cls, text: str) -> "DegreeLaw":
        """Parse ``powerlaw:alpha[:k_min[:k_max]]``, ``poisson:mean`` or ``regular:k``.

        Raises:
            ParseError: If the text is not a valid law.
        """
        kind, *params = text.strip().split(":")
        try:
            if kind == "powerlaw" and 1 <= len(params) <= 3:
                k_min = int(params[1]) if len(params) > 1 else 1
                k_max = int(params[2]) if len(params) > 2 else None
                return cls.powerlaw(float(params[0]), k_min, k_max)
            if kind == "poisson" and len(params) == 1:
                return cls.poisson(float(params[0]))
            if kind == "regular" and len(params) == 1:
                return cls.regular(int(params[0]))
        except ValueError as e:
            raise ParseError(f"invalid degree law {text!r}: {e}") from e
        raise ParseError(f"invalid degree law {text!r}")

    def to_string(self) -> str:
        if self.kind == "powerlaw":
            suffix = "" if self.k_max is None else f":{self.k_max}"
            return f"powerlaw:{self.exponent:g}:{self.k_min}{suffix}"
        if self.kind == "poisson":
            return f"poisson:{self.mean:g}"
        return f"regular:{self.k}"

    def largest_degree(self, node_count: int) -> int:
        if self.kind == "powerlaw":
            return node_count - 1 if self.k_max is None else self.k_max
        if self.kind == "regular":
            return self.k
        return node_count - 1

    def sample(self, node_count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``node_count`` degrees.

        Raises:
            InfeasibleDegreeSequence: If a degree could reach ``node_count``.
        """
        cap = self.largest_degree(node_count)
        if cap >= node_count:
            raise InfeasibleDegreeSequence(
                f"{self.to_string()} allows degree {cap} on {node_count} nodes"
            )
        if self.kind == "regular":
            return np.full(node_count, self.k, dtype=np.int64)
        if self.kind == "poisson":
            return np.minimum(rng.poisson(self.mean, node_count), node_count - 1).astype(np.int64)

        degrees = np.empty(node_count, dtype=np.int64)
        pending = np.arange(node_count)
        while pending.size:
            u = rng.random(pending.size)
            draws = np.floor(self.k_min * (1.0 - u) ** (-1.0 / (self.exponent - 1.0)))
            accepted = draws <= cap
            degrees[pending[accepted]] = draws[accepted].astype(np.int64)
            pending = pending[~accepted]
        return degrees


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic graph.

    Attributes:
        node_count: Number of nodes N.
        phi: Protected fraction; exactly floor(phi * N) nodes are protected.
        in_degree_law: In-degree distribution.
        out_degree_law: Out-degree distribution.
        seed: RNG seed; equal specs give identical graphs.
    """

    node_count: int
    phi: float = 0.5
    in_degree_law: DegreeLaw = field(default_factory=lambda: DegreeLaw.poisson(8.0))
    out_degree_law: DegreeLaw = field(default_factory=lambda: DegreeLaw.poisson(8.0))
    seed: int = 0

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise ValueError(f"node_count must be >= 1, got {self.node_count}")
        if not 0.0 <= self.phi <= 1.0:
            raise ValueError(f"phi must be in [0, 1], got {self.phi}")

    @classmethod
    def parse(cls, text: str) -> "SynthSpec":
        """Parse ``n=1000,phi=0.3,in=powerlaw:2.5:3,out=poisson:8,seed=7``.

        Only ``n`` is required.

        Raises:
            ParseError: On unknown keys or malformed values.
        """
        fields: dict[str, str] = {}
        for part in text.split(","):
            if not part.strip():
                continue
            key, sep, value = part.partition("=")
            key = key.strip()
            if not sep or key not in ("n", "phi", "in", "out", "seed"):
                raise ParseError(f"invalid synth spec entry {part!r}")
            fields[key] = value.strip()
        if "n" not in fields:
            raise ParseError("synth spec needs n=<node count>")
        kwargs: dict[str, Any] = {}
        try:
            kwargs["node_count"] = int(fields["n"])
            if "phi" in fields:
                kwargs["phi"] = float(fields["phi"])
            if "seed" in fields:
                kwargs["seed"] = int(fields["seed"])
            if "in" in fields:
                kwargs["in_degree_law"] = DegreeLaw.parse(fields["in"])
            if "out" in fields:
                kwargs["out_degree_law"] = DegreeLaw.parse(fields["out"])
            return cls(**kwargs)
        except ValueError as e:
            raise ParseError(f"invalid synth spec {text!r}: {e}") from e

    def to_string(self) -> str:
        return (
            f"n={self.node_count},phi={self.phi:g},in={self.in_degree_law.to_string()},"
            f"out={self.out_degree_law.to_string()},seed={self.seed}"
        )


@dataclass
class SynthResult:
    """A generated graph with its labels and generation metadata."""

    graph: DirectedGraph
    groups: GroupAssignment
    metadata: dict[str, Any]


def _balance(k_in: np.ndarray, k_out: np.ndarray, rng: np.random.Generator) -> tuple[str, int]:
    """Remove stubs from random maximal-degree nodes until the sums agree."""
    excess = int(k_in.sum() - k_out.sum())
    if excess == 0:
        return "none", 0
    side, degrees = ("in", k_in) if excess > 0 else ("out", k_out)
    remaining = abs(excess)
    while remaining:
        top = np.flatnonzero(degrees == degrees.max())
        chosen = rng.choice(top, size=min(remaining, top.size), replace=False)
        degrees[chosen] -= 1
        remaining -= chosen.size
    return side, abs(excess)


def _rewire(
    sources: np.ndarray, targets: np.ndarray, n: int, rng: np.random.Generator
) -> tuple[int, int]:
    """Swap targets until there are no self-loops or duplicate edges.

    Swapping targets between two edges keeps every node's degrees.

    Returns:
        Tuple of (edges rewired, attempts used).

    Raises:
        InfeasibleDegreeSequence: If the attempt budget runs out.
    """
    m = sources.shape[0]
    keys = sources * n + targets
    _, first = np.unique(keys, return_index=True)
    duplicate = np.ones(m, dtype=bool)
    duplicate[first] = False
    bad = np.flatnonzero(duplicate | (sources == targets))
    if bad.size == 0:
        return 0, 0

    counts = Counter(keys.tolist())
    budget = REWIRE_ATTEMPTS_PER_EDGE * m
    attempts = 0
    rewired = 0
    for i in bad.tolist():
        key_i = int(sources[i] * n + targets[i])
        if sources[i] != targets[i] and counts[key_i] <= 1:
            continue
        while True:
            attempts += 1
            if attempts > budget:
                raise InfeasibleDegreeSequence(
                    f"could not remove conflicting edges after {budget} rewiring attempts"
                )
            j = int(rng.integers(m))
            si, ti, sj, tj = int(sources[i]), int(targets[i]), int(sources[j]), int(targets[j])
            if j == i or si == tj or sj == ti:
                continue
            new_i, new_j = si * n + tj, sj * n + ti
            if counts[new_i] or counts[new_j]:
                continue
            counts[si * n + ti] -= 1
            counts[sj * n + tj] -= 1
            counts[new_i] += 1
            counts[new_j] += 1
            targets[i], targets[j] = tj, ti
            rewired += 1
            break
    return rewired, attempts


def generate_detailed(spec: SynthSpec) -> SynthResult:
    """Generate a graph and report how the degree sequences were repaired.

    Raises:
        InfeasibleDegreeSequence: If a law allows degree >= N or rewiring fails.
    """
    n = spec.node_count
    rng = np.random.default_rng(spec.seed)
    k_in = spec.in_degree_law.sample(n, rng)
    k_out = spec.out_degree_law.sample(n, rng)
    repaired_side, repaired = _balance(k_in, k_out, rng)
    if repaired:
        logger.warning("Balanced degree sums", side=repaired_side, removed_stubs=repaired)

    m = int(k_out.sum())
    if m > n * (n - 1):
        raise InfeasibleDegreeSequence(f"{m} edges cannot fit on {n} nodes without self-loops")
    sources = np.repeat(np.arange(n, dtype=np.int64), k_out)
    targets = np.repeat(np.arange(n, dtype=np.int64), k_in)[rng.permutation(m)]
    rewired, attempts = _rewire(sources, targets, n, rng)
    if rewired:
        logger.warning("Rewired conflicting edges", rewired=rewired, attempts=attempts)

    graph = build_graph(np.column_stack((sources, targets)), node_count=n)
    labels = np.zeros(n, dtype=np.int64)
    labels[rng.permutation(n)[: math.floor(spec.phi * n)]] = 1
    groups = GroupAssignment.from_labels(labels, graph)

    metadata = {
        "spec": spec.to_string(),
        "node_count": n,
        "edge_count": graph.edge_count,
        "protected_count": groups.protected_count,
        "repaired_side": repaired_side,
        "repaired_stubs": repaired,
        "rewired_edges": rewired,
        "rewire_attempts": attempts,
    }
    logger.info("Generated synthetic graph", **metadata)
    return SynthResult(graph=graph, groups=groups, metadata=metadata)


def generate(spec: SynthSpec) -> tuple[DirectedGraph, GroupAssignment]:
    """Generate a two-group uncorrelated directed graph."""
    result = generate_detailed(spec)
    return result.graph, result.groups


@dataclass(frozen=True)
class DegreeMoments:
    """Empirical degree moments of a graph.

    Attributes:
        mean_in_degree: ``<k_in> = M / N``.
        in_sq_over_out: ``<k_in^2 / k_out>`` over nodes with k_out >= 1
            (NaN when there are none).
        max_in_degree: Largest in-degree.
        max_out_degree: Largest out-degree.
    """

    mean_in_degree: float
    in_sq_over_out: float
    max_in_degree: int
    max_out_degree: int


def degree_moments(g: DirectedGraph) -> DegreeMoments:
    """Degree moments that enter the variance and CV predictions."""
    k_in = g.in_degree.astype(np.float64)
    k_out = g.out_degree.astype(np.float64)
    eligible = k_out > 0
    moment = float(np.mean(k_in[eligible] ** 2 / k_out[eligible])) if eligible.any() else math.nan
    return DegreeMoments(
        mean_in_degree=g.edge_count / g.node_count,
        in_sq_over_out=moment,
        max_in_degree=int(g.in_degree.max()),
        max_out_degree=int(g.out_degree.max()),
    )
