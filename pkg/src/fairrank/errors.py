"""Exception hierarchy for fairrank.

Every error carries the exit code the command-line surface reports for it.
"""

from collections.abc import Sequence

EXIT_GENERIC = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_DENSE_CAP = 4
EXIT_NO_CONVERGENCE = 5


class FairRankError(Exception):
    """Base class for all fairrank errors."""

    exit_code = EXIT_GENERIC


class EmptyGraph(FairRankError):
    """Raised when a graph would have no nodes."""


class DuplicateEdge(FairRankError):
    """Raised when an edge appears twice and deduplication is disabled."""

    def __init__(self, source: int, target: int) -> None:
        super().__init__(f"duplicate edge {source} -> {target}")
        self.source = source
        self.target = target


class DimensionMismatch(FairRankError):
    """Raised when a vector length does not match the graph size."""

    def __init__(self, expected: int, actual: int, what: str = "vector") -> None:
        super().__init__(f"{what} has length {actual}, expected {expected}")
        self.expected = expected
        self.actual = actual


class ParseError(FairRankError):
    """Raised when an input file cannot be parsed."""

    exit_code = EXIT_PARSE

    def __init__(self, message: str, path: str | None = None, line: int | None = None) -> None:
        location = ""
        if path is not None:
            location = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class NodeSetMismatch(FairRankError):
    """Raised when two score files do not describe the same nodes."""

    exit_code = EXIT_PARSE


class Infeasible(FairRankError):
    """Raised when no jump distribution attains the target protected mass."""

    exit_code = EXIT_INFEASIBLE

    def __init__(self, target: float, low: float, high: float) -> None:
        super().__init__(
            f"target protected mass {target:.6g} outside achievable range "
            f"[{low:.6g}, {high:.6g}]"
        )
        self.target = target
        self.low = low
        self.high = high


class GraphTooLargeForDense(FairRankError):
    """Raised when the dense path is asked to handle more nodes than its cap."""

    exit_code = EXIT_DENSE_CAP

    def __init__(self, node_count: int, cap: int) -> None:
        super().__init__(
            f"graph has {node_count} nodes, dense cap is {cap}; "
            "use --method gmres or raise --dense-cap"
        )
        self.node_count = node_count
        self.cap = cap


class SingularSystem(FairRankError):
    """Raised when the dense PageRank system cannot be solved."""


class NoConvergence(FairRankError):
    """Raised when an iterative solver exhausts its iteration budget."""

    exit_code = EXIT_NO_CONVERGENCE

    def __init__(
        self,
        solver: str,
        iterations: int,
        residual: float,
        history: Sequence[float] = (),
    ) -> None:
        super().__init__(
            f"{solver} did not converge after {iterations} iterations "
            f"(residual {residual:.3e})"
        )
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        self.history = tuple(history)


class Breakdown(FairRankError):
    """Raised when the Arnoldi process breaks down without converging."""


class DegenerateGroup(FairRankError):
    """Raised when a nonempty group has zero total in-degree."""


class EmptyMoment(FairRankError):
    """Raised when no node has positive out-degree for a degree moment."""


class DegenerateInput(FairRankError):
    """Raised when a statistic is undefined for its input (e.g. zero variance)."""


class InfeasibleDegreeSequence(FairRankError):
    """Raised when a degree sequence cannot be realized as a simple digraph."""
