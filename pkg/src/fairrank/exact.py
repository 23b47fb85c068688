"""Exact fairness-sensitive PageRank on small graphs.

PageRank with jump vector ``v`` is linear in ``v``: ``p = Q.T @ v`` with the
resolvent ``Q = nu * (I - (1 - nu) P)^-1``. The fair ranking is the score
vector closest to uniform-jump PageRank among those reachable by a valid
jump vector that gives the protected group the target mass.
"""

import time

import numpy as np

from .errors import (
    DimensionMismatch,
    GraphTooLargeForDense,
    Infeasible,
    NoConvergence,
    SingularSystem,
)
from .graph import DirectedGraph, GroupAssignment
from .logging_config import get_logger
from .scores import FairnessSpec, ScoreVector, SolverReport, protected_mass
from .simplex import dykstra_projection, project_simplex_slice

logger = get_logger(__name__)

DEFAULT_DENSE_CAP = 5000
FEASIBILITY_SLACK = 1e-12
PROJECTION_CHECK_TOL = 1e-8


def _as_vector(x: np.ndarray, n: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape[0] != n:
        raise DimensionMismatch(n, arr.shape[0], what)
    return arr


def transition_apply(g: DirectedGraph, x: np.ndarray) -> np.ndarray:
    """Apply the column-stochastic transition operator to ``x``.

    Node ``j`` with out-degree ``k`` sends ``x[j] / k`` to each successor;
    dangling nodes spread their value uniformly over all nodes.

    Raises:
        DimensionMismatch: If ``len(x) != N``.
    """
    x = _as_vector(x, g.node_count, "vector")
    y = g.transition_transpose @ x
    dangling_total = float(x[g.dangling_mask].sum())
    if dangling_total != 0.0:
        y += dangling_total / g.node_count
    return y


def _check_jump(jump: np.ndarray, n: int) -> np.ndarray:
    jump = _as_vector(jump, n, "jump vector")
    if not np.all(np.isfinite(jump)) or jump.min() < 0.0:
        raise ValueError("jump vector must be finite and nonnegative")
    if abs(float(jump.sum()) - 1.0) > 1e-10:
        raise ValueError(f"jump vector sums to {float(jump.sum())!r}, expected 1")
    return jump


def pagerank_power(
    g: DirectedGraph,
    spec: FairnessSpec,
    jump: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iters: int = 1000,
) -> tuple[ScoreVector, SolverReport]:
    """PageRank by power iteration.

    Args:
        g: Graph to rank.
        spec: Supplies the teleport probability ``nu``.
        jump: Jump distribution; uniform when None.
        tol: Stop when the L1 change between iterates is at most ``tol``.
        max_iters: Iteration cap.

    Returns:
        Tuple of (scores, report).

    Raises:
        NoConvergence: If ``max_iters`` is reached first.
    """
    start = time.perf_counter()
    n = g.node_count
    jump = np.full(n, 1.0 / n) if jump is None else _check_jump(jump, n)
    nu = spec.nu
    p = np.full(n, 1.0 / n)
    history: list[float] = []
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        p_next = nu * jump + (1.0 - nu) * transition_apply(g, p)
        residual = float(np.abs(p_next - p).sum())
        history.append(residual)
        p = p_next
        if residual <= tol:
            break
    else:
        raise NoConvergence("pagerank_power", max_iters, residual, history)

    scores = ScoreVector.normalized(p)
    report = SolverReport(
        method="power",
        outer_iterations=iteration,
        inner_iterations_total=iteration,
        final_residual=residual,
        wall_time_seconds=time.perf_counter() - start,
        matvec_count=iteration,
        residual_history=tuple(history),
    )
    logger.debug("Power iteration converged", iterations=iteration, residual=residual)
    return scores, report


def dense_transition(g: DirectedGraph) -> np.ndarray:
    """Row-stochastic dense transition matrix (dangling rows uniform)."""
    n = g.node_count
    matrix = np.zeros((n, n), dtype=np.float64)
    sources, targets = g.sources, g.targets
    matrix[sources, targets] = 1.0 / g.out_degree[sources]
    matrix[g.dangling_mask, :] = 1.0 / n
    return matrix


class DenseResolvent:
    """Dense PageRank resolvent ``Q = nu * (I - (1 - nu) P)^-1``.

    Row ``i`` of ``Q`` is the PageRank of a walk that always jumps back to
    node ``i``. Every row sums to one and all entries are nonnegative.
    """

    def __init__(self, q: np.ndarray, nu: float):
        self.q = q
        self.nu = nu
        self.q.setflags(write=False)

    @property
    def node_count(self) -> int:
        return int(self.q.shape[0])

    def scores(self, jump: np.ndarray) -> np.ndarray:
        """PageRank scores ``Q.T @ jump`` for an arbitrary jump vector."""
        return _as_vector(jump, self.node_count, "jump vector") @ self.q

    def unit_jump_mass(self, groups: GroupAssignment) -> np.ndarray:
        """Protected mass reached from a unit jump at each node (``Q @ f``)."""
        if groups.node_count != self.node_count:
            raise DimensionMismatch(self.node_count, groups.node_count, "group labels")
        return self.q @ groups.protected.astype(np.float64)


def build_resolvent(
    g: DirectedGraph, spec: FairnessSpec, dense_cap: int = DEFAULT_DENSE_CAP
) -> DenseResolvent:
    """Form the dense resolvent of ``g``.

    Raises:
        GraphTooLargeForDense: If ``N`` exceeds ``dense_cap``.
        SingularSystem: If the linear solve fails.
    """
    n = g.node_count
    if n > dense_cap:
        raise GraphTooLargeForDense(n, dense_cap)
    nu = spec.nu
    system = np.eye(n) - (1.0 - nu) * dense_transition(g)
    try:
        q = nu * np.linalg.solve(system, np.eye(n))
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"resolvent solve failed: {e}") from e
    if not np.all(np.isfinite(q)):
        raise SingularSystem("resolvent contains non-finite entries")
    return DenseResolvent(q, nu)


def achievable_mass_range(q: DenseResolvent, groups: GroupAssignment) -> tuple[float, float]:
    """Smallest and largest protected mass reachable by a valid jump vector."""
    c = q.unit_jump_mass(groups)
    return float(c.min()), float(c.max())


def _lipschitz_bound(q: np.ndarray, iters: int = 30) -> float:
    """Upper estimate of ``2 * ||Q||_2^2`` (gradient Lipschitz constant)."""
    # Q >= 0 with unit row sums, so ||Q||_2^2 <= max column sum.
    ceiling = float(q.sum(axis=0).max())
    x = np.full(q.shape[0], 1.0 / np.sqrt(q.shape[0]))
    estimate = 0.0
    for _ in range(iters):
        y = q @ (q.T @ x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            break
        estimate = norm
        x = y / norm
    return 2.0 * min(ceiling, 1.05 * estimate) if estimate > 0.0 else 2.0 * ceiling


def _fista(
    q: np.ndarray,
    anchor: np.ndarray,
    c: np.ndarray,
    target: float,
    tol: float,
    max_iters: int,
) -> tuple[np.ndarray, int, float, list[float]]:
    """Accelerated projected gradient with adaptive restart.

    Minimizes ``||Q.T v - anchor||^2`` over the simplex slice. The stopping
    residual is the norm of the gradient mapping, which vanishes exactly at
    KKT points.
    """
    n = q.shape[0]
    lipschitz = _lipschitz_bound(q)
    x, mu = project_simplex_slice(np.full(n, 1.0 / n), c, target)
    y = x.copy()
    momentum = 1.0
    history: list[float] = []
    residual = np.inf
    for iteration in range(1, max_iters + 1):
        gradient = 2.0 * (q @ (y @ q - anchor))
        x_next, mu = project_simplex_slice(y - gradient / lipschitz, c, target, mu_hint=mu)
        residual = lipschitz * float(np.linalg.norm(y - x_next))
        history.append(residual)
        if residual <= tol:
            return x_next, iteration, residual, history
        if float(np.dot(y - x_next, x_next - x)) > 0.0:
            momentum = 1.0
            y = x_next
        else:
            momentum_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
            y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x)
            momentum = momentum_next
        x = x_next
    raise NoConvergence("exact_fspr", max_iters, residual, history)


def _projection_deviation(
    q: np.ndarray, anchor: np.ndarray, c: np.ndarray, target: float, jump: np.ndarray
) -> float:
    """Gap between the exact slice projection and Dykstra's at one more gradient step."""
    point = jump - 2.0 * (q @ (jump @ q - anchor)) / _lipschitz_bound(q)
    exact, _ = project_simplex_slice(point, c, target)
    deviation = float(np.abs(exact - dykstra_projection(point, c, target)).max())
    if deviation > PROJECTION_CHECK_TOL:
        logger.warning(
            "Slice projection disagrees with Dykstra",
            deviation=deviation,
            tol=PROJECTION_CHECK_TOL,
        )
    else:
        logger.debug("Slice projection agrees with Dykstra", deviation=deviation)
    return deviation


def _relaxed_jump(
    q: DenseResolvent, anchor: np.ndarray, groups: GroupAssignment, target: float
) -> np.ndarray:
    """Jump vector for the relaxed problem that drops ``v >= 0``.

    The closest score vector to ``anchor`` with protected mass ``target``
    spreads the mass deficit evenly within each group; the jump vector is
    recovered from the scores by inverting ``Q.T``.
    """
    shifted = anchor.copy()
    current = float(anchor[groups.protected].sum())
    deficit = target - current
    if groups.protected_count and groups.unprotected_count:
        # Scores, unlike the jump vector, must stay nonnegative.
        low = current - groups.protected_count * float(anchor[groups.protected].min())
        high = current + groups.unprotected_count * float(anchor[~groups.protected].min())
        if not low - FEASIBILITY_SLACK <= target <= high + FEASIBILITY_SLACK:
            raise Infeasible(target, low, high)
        shifted[groups.protected] += deficit / groups.protected_count
        shifted[~groups.protected] -= deficit / groups.unprotected_count
    try:
        return np.linalg.solve(q.q.T, shifted)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"jump recovery failed: {e}") from e


def exact_fspr(
    g: DirectedGraph,
    groups: GroupAssignment,
    spec: FairnessSpec,
    dense_cap: int = DEFAULT_DENSE_CAP,
    allow_negative_jump: bool = False,
    tol: float = 1e-10,
    max_iters: int = 100_000,
    check_projection: bool = False,
) -> tuple[ScoreVector, np.ndarray, SolverReport]:
    """Fair ranking closest to PageRank under a protected-mass constraint.

    Args:
        g: Graph to rank.
        groups: Protected/unprotected labels.
        spec: Teleport probability and target (phi when unset).
        dense_cap: Largest ``N`` for which the dense resolvent is formed.
        allow_negative_jump: Drop ``v >= 0`` and use the closed-form
            relaxed solution. The returned jump vector may be negative.
        tol: KKT residual tolerance of the projected-gradient solver.
        max_iters: Projected-gradient iteration cap.
        check_projection: Re-project the final gradient step with Dykstra's
            method and record the largest deviation from the exact
            projection as ``projection_deviation``. Ignored in relaxed mode.

    Returns:
        Tuple of (fair scores, jump vector, report). ``report.extra`` carries
        the objective value, the resolved target and the uniform-jump
        PageRank protected mass.

    Raises:
        GraphTooLargeForDense: If ``N > dense_cap``.
        Infeasible: If the target is outside the achievable mass range.
        NoConvergence: If the solver hits ``max_iters``.
    """
    start = time.perf_counter()
    if groups.node_count != g.node_count:
        raise DimensionMismatch(g.node_count, groups.node_count, "group labels")
    resolvent = build_resolvent(g, spec, dense_cap)
    n = g.node_count
    target = spec.resolve_target(groups)
    anchor = resolvent.scores(np.full(n, 1.0 / n))
    c = resolvent.unit_jump_mass(groups)
    low, high = float(c.min()), float(c.max())
    # The relaxed problem checks its own, wider range on the scores.
    single_group = groups.protected_count in (0, n)
    if (not allow_negative_jump or single_group) and not (
        low - FEASIBILITY_SLACK <= target <= high + FEASIBILITY_SLACK
    ):
        raise Infeasible(target, low, high)

    logger.info(
        "Solving exact fair ranking",
        nodes=n,
        edges=g.edge_count,
        target=target,
        relaxed=allow_negative_jump,
    )
    if allow_negative_jump:
        jump = _relaxed_jump(resolvent, anchor, groups, target)
        iterations, residual, history = 0, 0.0, []
        scores = ScoreVector.normalized(resolvent.scores(jump))
    else:
        jump, iterations, residual, history = _fista(
            resolvent.q, anchor, c, target, tol, max_iters
        )
        scores = ScoreVector.normalized(resolvent.scores(jump))

    objective = float(np.sum((scores.scores - anchor) ** 2))
    report = SolverReport(
        method="exact",
        outer_iterations=iterations,
        inner_iterations_total=iterations,
        final_residual=residual,
        achieved_protected_mass=protected_mass(scores, groups),
        wall_time_seconds=time.perf_counter() - start,
        residual_history=tuple(history),
        extra={
            "objective": objective,
            "target": target,
            "pagerank_protected_mass": float(anchor[groups.protected].sum()),
            "allow_negative_jump": allow_negative_jump,
        },
    )
    if check_projection and not allow_negative_jump:
        report.extra["projection_deviation"] = _projection_deviation(
            resolvent.q, anchor, c, target, jump
        )
    logger.info(
        "Exact fair ranking solved",
        iterations=iterations,
        residual=residual,
        objective=objective,
        protected_mass=report.achieved_protected_mass,
    )
    return scores, jump, report
