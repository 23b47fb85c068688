"""Mean-field approximation of fairness-sensitive PageRank.

Nodes are aggregated into (k_in, k_out, group) degree classes. Under the
uncorrelated-network assumption every node's score depends only on its
in-degree and group, which gives a closed form computable in one pass over
the degree sequence.
"""

import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DegenerateGroup,
    DegenerateInput,
    DimensionMismatch,
    EmptyMoment,
    NoConvergence,
)
from .graph import (
    DegreeClassPartition,
    DirectedGraph,
    GroupAssignment,
    class_average,
    partition_degree_classes,
)
from .logging_config import get_logger
from .scores import FairnessSpec, ScoreVector, SolverReport, protected_mass

logger = get_logger(__name__)

MEANFIELD_TOL = 1e-12
MEANFIELD_MAX_ITERS = 200


@dataclass(frozen=True, eq=False)
class JumpEstimate:
    """Degree-proportional jump vector.

    Each group receives its target mass, split among its members in
    proportion to in-degree: ``v(u) = phi_C * k_in(u) / D_C``.

    Attributes:
        per_node: Jump probability per node.
        protected_share: Mass assigned to the protected group.
        fallback_groups: Groups whose mass was spread uniformly because their
            total in-degree is zero.
    """

    per_node: np.ndarray
    protected_share: float
    fallback_groups: tuple[str, ...] = ()

    def class_values(self, part: DegreeClassPartition) -> np.ndarray:
        """Per-class jump value (identical for all class members)."""
        if part.node_count != self.per_node.shape[0]:
            raise DimensionMismatch(part.node_count, self.per_node.shape[0], "jump estimate")
        return class_average(self.per_node, part)


@dataclass(frozen=True, eq=False)
class ClassVariance:
    """Predicted per-class variance and coefficient of variation."""

    variance: np.ndarray
    cv: np.ndarray
    mean_in_degree: float
    moment: float


@dataclass(frozen=True, eq=False)
class MeanFieldScores:
    """Closed-form mean-field scores with their fluctuation theory.

    Node scores need only in-degrees and groups. The degree-class partition
    and everything per class are built on first access.

    Attributes:
        per_node: Normalized node-level scores.
        unnormalized: Node-level scores before renormalization.
        jump: The jump estimate the scores were built from.
    """

    graph: DirectedGraph
    groups: GroupAssignment
    spec: FairnessSpec
    per_node: ScoreVector
    unnormalized: np.ndarray
    jump: JumpEstimate

    @cached_property
    def partition(self) -> DegreeClassPartition:
        """Degree classes the per-class arrays refer to."""
        return partition_degree_classes(self.graph, self.groups)

    @cached_property
    def per_class_mean(self) -> np.ndarray:
        return class_average(self.per_node, self.partition)

    @cached_property
    def fluctuation(self) -> ClassVariance | None:
        """Predicted variance and CV per class; None without a usable moment."""
        try:
            return meanfield_variance(self.partition, self.groups, self.spec)
        except EmptyMoment:
            return None

    @property
    def variance_per_class(self) -> np.ndarray:
        if self.fluctuation is None:
            return np.full(len(self.partition), np.nan)
        return self.fluctuation.variance

    @property
    def cv_per_class(self) -> np.ndarray:
        """Coefficient of variation per class (NaN when k_in = 0)."""
        if self.fluctuation is None:
            return np.full(len(self.partition), np.nan)
        return self.fluctuation.cv


def estimate_jump(
    g: DirectedGraph,
    groups: GroupAssignment,
    target: float | None = None,
    uniform_fallback: bool = False,
) -> JumpEstimate:
    """Estimate the fair jump vector from in-degrees.

    Args:
        g: The graph.
        groups: Group labels.
        target: Protected mass; the protected fraction phi when None.
        uniform_fallback: Spread a group's mass uniformly over its members
            when the group has zero total in-degree instead of raising.

    Returns:
        The JumpEstimate.

    Raises:
        DegenerateGroup: If a group that must receive mass has no in-edges
            (and no fallback), or is empty.
    """
    if groups.node_count != g.node_count:
        raise DimensionMismatch(g.node_count, groups.node_count, "group labels")
    share = groups.phi if target is None else float(target)
    jump = np.zeros(g.node_count)
    fallbacks: list[str] = []
    for name, mask, mass in (
        ("protected", groups.protected, share),
        ("unprotected", ~groups.protected, 1.0 - share),
    ):
        if not mask.any():
            if mass > 0.0:
                raise DegenerateGroup(f"{name} group is empty but must receive mass {mass:.6g}")
            continue
        in_degree = g.in_degree[mask].astype(np.float64)
        total = float(in_degree.sum())
        if total == 0.0:
            if not uniform_fallback:
                raise DegenerateGroup(f"{name} group has zero total in-degree")
            logger.warning("Spreading jump mass uniformly", group=name, mass=mass)
            jump[mask] = mass / int(mask.sum())
            fallbacks.append(name)
        else:
            jump[mask] = mass * in_degree / total
    return JumpEstimate(per_node=jump, protected_share=share, fallback_groups=tuple(fallbacks))


def meanfield_iterate(
    part: DegreeClassPartition,
    jump: JumpEstimate,
    spec: FairnessSpec,
    tol: float = MEANFIELD_TOL,
    max_iters: int = MEANFIELD_MAX_ITERS,
) -> tuple[np.ndarray, SolverReport]:
    """Iterate the degree-class mean-field recursion.

    ``p(k) <- nu * v(k) + (1 - nu) * sum_k' E[k', k] p(k') / (k'_out * |k|)``,
    where ``E`` counts edges between classes. Starts from ``1 / N`` and stops
    when the class-size weighted L1 change is at most ``tol``.

    Returns:
        Tuple of (per-class means, report).

    Raises:
        NoConvergence: If ``max_iters`` is reached first.
    """
    start = time.perf_counter()
    nu = spec.nu
    class_jump = jump.class_values(part)
    sizes = part.class_size.astype(np.float64)
    k_out = part.k_out.astype(np.float64)
    inverse_out = np.divide(1.0, k_out, out=np.zeros_like(k_out), where=k_out > 0)
    inflow = part.class_edge_counts.T.tocsr()

    means = np.full(len(part), 1.0 / part.node_count)
    history: list[float] = []
    change = np.inf
    for iteration in range(1, max_iters + 1):
        updated = nu * class_jump + (1.0 - nu) * (inflow @ (means * inverse_out)) / sizes
        change = float(np.abs(updated - means) @ sizes)
        history.append(change)
        means = updated
        if change <= tol:
            break
    else:
        raise NoConvergence("meanfield_iterate", max_iters, change, history)

    report = SolverReport(
        method="meanfield-iterative",
        outer_iterations=iteration,
        inner_iterations_total=iteration,
        final_residual=change,
        wall_time_seconds=time.perf_counter() - start,
        matvec_count=iteration,
        residual_history=tuple(history),
        extra={"classes": len(part)},
    )
    logger.debug("Mean-field recursion converged", iterations=iteration, change=change)
    return means, report


def meanfield_node_scores(part: DegreeClassPartition, means: np.ndarray) -> ScoreVector:
    """Broadcast per-class means to their members and renormalize."""
    means = np.asarray(means, dtype=np.float64).reshape(-1)
    if means.shape[0] != len(part):
        raise DimensionMismatch(len(part), means.shape[0], "class means")
    return ScoreVector.normalized(means[part.membership])


def _closed_form_raw(g: DirectedGraph, jump: JumpEstimate, nu: float) -> np.ndarray:
    return nu * jump.per_node + (1.0 - nu) * g.in_degree / g.edge_count


def meanfield_closed_form(
    g: DirectedGraph,
    groups: GroupAssignment,
    spec: FairnessSpec,
    uniform_fallback: bool = False,
) -> MeanFieldScores:
    """Closed-form mean-field scores.

    ``p(u) = nu * phi_C k_in(u) / D_C + (1 - nu) k_in(u) / M``, renormalized.
    The score depends on the node only through its in-degree and group.

    Args:
        g: The graph (at least one edge).
        groups: Group labels.
        spec: Teleport probability and target.
        uniform_fallback: Passed to estimate_jump.

    Returns:
        MeanFieldScores; per-class arrays are computed on first access.

    Raises:
        DegenerateGroup: See estimate_jump.
        DegenerateInput: If the graph has no edges.
    """
    if g.edge_count == 0:
        raise DegenerateInput("mean-field scores need at least one edge")
    jump = estimate_jump(g, groups, spec.resolve_target(groups), uniform_fallback)
    raw = _closed_form_raw(g, jump, spec.nu)
    return MeanFieldScores(
        graph=g,
        groups=groups,
        spec=spec,
        per_node=ScoreVector.normalized(raw),
        unnormalized=raw,
        jump=jump,
    )


def meanfield_group_mass(
    g: DirectedGraph, groups: GroupAssignment, spec: FairnessSpec
) -> tuple[float, float]:
    """Analytic protected mass and fairness gap of the closed form.

    Returns:
        Tuple ``(nu * t + (1 - nu) * D_P / M, |mass - t|)`` with ``t`` the
        resolved target.
    """
    if g.edge_count == 0:
        raise DegenerateInput("mean-field scores need at least one edge")
    target = spec.resolve_target(groups)
    mass = spec.nu * target + (1.0 - spec.nu) * groups.d_protected / g.edge_count
    return mass, abs(mass - target)


def meanfield_variance(
    part: DegreeClassPartition,
    groups: GroupAssignment,
    spec: FairnessSpec,
    include_dangling: bool = False,
) -> ClassVariance:
    """Heavy-tail variance and coefficient of variation per class.

    ``var(k) = (1 - nu)^4 / (N^2 <k>^3) * <k_in^2 / k_out> * k_in`` and
    ``cv(k) = (1 - nu) * sqrt(<k_in^2 / k_out> / (<k> * k_in))``.

    Args:
        part: Degree classes.
        groups: Group labels (must cover the partition's nodes).
        spec: Teleport probability.
        include_dangling: Count nodes without out-edges in the moment with
            effective out-degree N, as the dangling patch treats them.
            By default they are left out.

    Raises:
        EmptyMoment: If no node qualifies for the moment or there are no edges.
    """
    if groups.node_count != part.node_count:
        raise DimensionMismatch(part.node_count, groups.node_count, "group labels")
    n = part.node_count
    sizes = part.class_size.astype(np.float64)
    k_in = part.k_in.astype(np.float64)
    k_out = part.k_out.astype(np.float64)
    if include_dangling:
        k_out = np.where(k_out > 0, k_out, float(n))
    eligible = k_out > 0
    if not eligible.any():
        raise EmptyMoment("no node has positive out-degree")
    mean_in = float(k_in @ sizes) / n
    if mean_in == 0.0:
        raise EmptyMoment("graph has no edges")
    moment = float((k_in[eligible] ** 2 / k_out[eligible]) @ sizes[eligible]) / float(
        sizes[eligible].sum()
    )

    damping = 1.0 - spec.nu
    variance = damping**4 / (n * n * mean_in**3) * moment * k_in
    with np.errstate(divide="ignore", invalid="ignore"):
        cv = np.where(k_in > 0, damping * np.sqrt(moment / (mean_in * k_in)), np.nan)
    return ClassVariance(variance=variance, cv=cv, mean_in_degree=mean_in, moment=moment)


def meanfield_variance_iterate(
    part: DegreeClassPartition,
    means: np.ndarray,
    spec: FairnessSpec,
    tol: float = MEANFIELD_TOL,
    max_iters: int = MEANFIELD_MAX_ITERS,
) -> np.ndarray:
    """Per-class variance from the full recursion on class edge counts.

    A node of class ``k`` sums ``k_in`` contributions ``p(j) / k_out(j)``
    whose source class is drawn from the empirical in-neighbour mix of ``k``;
    the variance of that sum is iterated to a fixed point starting at zero.

    Args:
        part: Degree classes.
        means: Per-class mean scores (e.g. from meanfield_iterate).
        spec: Teleport probability.
        tol: Class-size weighted L1 change threshold.
        max_iters: Iteration cap.

    Raises:
        NoConvergence: If ``max_iters`` is reached first.
    """
    means = np.asarray(means, dtype=np.float64).reshape(-1)
    if means.shape[0] != len(part):
        raise DimensionMismatch(len(part), means.shape[0], "class means")
    sizes = part.class_size.astype(np.float64)
    k_in = part.k_in.astype(np.float64)
    k_out = part.k_out.astype(np.float64)
    inverse_out = np.divide(1.0, k_out, out=np.zeros_like(k_out), where=k_out > 0)
    inflow = part.class_edge_counts.T.tocsr()
    in_edges = k_in * sizes
    weight = np.divide(1.0, in_edges, out=np.zeros_like(in_edges), where=in_edges > 0)

    first = (inflow @ (means * inverse_out)) * weight
    damping2 = (1.0 - spec.nu) ** 2
    variance = np.zeros(len(part))
    change = np.inf
    for _ in range(max_iters):
        second = (inflow @ ((variance + means**2) * inverse_out**2)) * weight
        updated = np.maximum(damping2 * k_in * (second - first**2), 0.0)
        change = float(np.abs(updated - variance) @ sizes)
        variance = updated
        if change <= tol:
            return variance
    raise NoConvergence("meanfield_variance_iterate", max_iters, change)


def meanfield_rank(
    g: DirectedGraph,
    groups: GroupAssignment,
    spec: FairnessSpec,
    iterative: bool = False,
    uniform_fallback: bool = False,
) -> tuple[ScoreVector, SolverReport]:
    """Run the closed form or the class recursion and report like a solver."""
    start = time.perf_counter()
    if iterative:
        part = partition_degree_classes(g, groups)
        jump = estimate_jump(g, groups, spec.resolve_target(groups), uniform_fallback)
        means, report = meanfield_iterate(part, jump, spec)
        scores = meanfield_node_scores(part, means)
    else:
        result = meanfield_closed_form(g, groups, spec, uniform_fallback)
        scores = result.per_node
        mass, gap = meanfield_group_mass(g, groups, spec)
        report = SolverReport(
            method="meanfield",
            extra={
                "analytic_protected_mass": mass,
                "analytic_fairness_gap": gap,
            },
        )
    report.achieved_protected_mass = protected_mass(scores, groups)
    report.wall_time_seconds = time.perf_counter() - start
    report.extra["target"] = spec.resolve_target(groups)
    logger.info(
        "Mean-field ranking computed",
        method=report.method,
        protected_mass=report.achieved_protected_mass,
        seconds=report.wall_time_seconds,
    )
    return scores, report
