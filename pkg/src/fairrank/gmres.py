"""Restarted GMRES PageRank solver and the fairness outer loop.

The PageRank system ``(I - (1 - nu) T) x = nu * jump`` is solved without
forming a matrix: every Krylov step costs one sparse product with the
transition operator plus a rank-one dangling correction.
"""

import time
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import Breakdown, DimensionMismatch, Infeasible, NoConvergence
from .exact import FEASIBILITY_SLACK, transition_apply
from .graph import DirectedGraph, GroupAssignment
from .logging_config import get_logger
from .scores import FairnessSpec, ScoreVector, SolverReport, protected_mass

__all__ = [
    "KrylovConfig",
    "KrylovTrace",
    "fair_gmres",
    "gmres_solve",
    "parametric_jump",
    "protected_mass",
    "restarted_gmres",
]

logger = get_logger(__name__)

REORTHOGONALIZE_TOL = 1e-8
BISECTION_STEPS = 60


@dataclass(frozen=True)
class KrylovConfig:
    """Restarted GMRES settings.

    Attributes:
        restart_dim: Krylov basis size before a restart.
        tol: Relative residual target.
        max_outer: Cap on restart cycles.
        fairness_tol: Allowed ``|protected mass - target|`` for fair_gmres.
    """

    restart_dim: int = 50
    tol: float = 1e-10
    max_outer: int = 100
    fairness_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.restart_dim < 1:
            raise ValueError(f"restart_dim must be >= 1, got {self.restart_dim}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_outer < 1:
            raise ValueError(f"max_outer must be >= 1, got {self.max_outer}")
        if not self.fairness_tol > 0.0:
            raise ValueError(f"fairness_tol must be positive, got {self.fairness_tol}")


@dataclass
class KrylovTrace:
    """Bookkeeping from one restarted GMRES run."""

    cycles: int = 0
    inner_iterations: int = 0
    matvec_count: int = 0
    final_residual: float = 0.0
    residual_history: list[float] = field(default_factory=list)


def restarted_gmres(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: np.ndarray,
    cfg: KrylovConfig,
) -> tuple[np.ndarray, KrylovTrace]:
    """Solve ``A x = b`` with restarted GMRES.

    Arnoldi uses modified Gram-Schmidt with a second pass when the new
    vector keeps an overlap above ``REORTHOGONALIZE_TOL`` with the basis.
    The small least-squares problem is reduced with Givens rotations so the
    residual norm is known after every inner step without forming ``x``.

    Args:
        apply: The matrix-vector product ``x -> A x``.
        b: Right-hand side.
        x0: Initial guess.
        cfg: Restart size, tolerance and cycle cap.

    Returns:
        Tuple of (solution, trace). ``trace.residual_history`` holds the
        relative residual at the start and after every inner iteration.

    Raises:
        NoConvergence: If ``cfg.max_outer`` cycles do not reach ``cfg.tol``.
        Breakdown: If the Hessenberg matrix becomes singular.
    """
    trace = KrylovTrace()
    n = b.shape[0]
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), trace
    x = x0.astype(np.float64, copy=True)
    m = min(cfg.restart_dim, n)

    for cycle in range(cfg.max_outer + 1):
        r = b - apply(x)
        trace.matvec_count += 1
        beta = float(np.linalg.norm(r))
        relative = beta / b_norm
        if cycle == 0:
            trace.residual_history.append(relative)
        trace.final_residual = relative
        if relative <= cfg.tol:
            trace.cycles = cycle
            return x, trace
        if cycle == cfg.max_outer:
            break

        basis = np.zeros((m + 1, n))
        hessenberg = np.zeros((m + 1, m))
        cos = np.zeros(m)
        sin = np.zeros(m)
        rhs = np.zeros(m + 1)
        rhs[0] = beta
        basis[0] = r / beta
        steps = 0
        for j in range(m):
            w = apply(basis[j])
            trace.matvec_count += 1
            trace.inner_iterations += 1
            for i in range(j + 1):
                hessenberg[i, j] = basis[i] @ w
                w -= hessenberg[i, j] * basis[i]
            h_next = float(np.linalg.norm(w))
            if h_next > 0.0 and np.abs(basis[: j + 1] @ w).max() > REORTHOGONALIZE_TOL * h_next:
                for i in range(j + 1):
                    correction = basis[i] @ w
                    hessenberg[i, j] += correction
                    w -= correction * basis[i]
                h_next = float(np.linalg.norm(w))
            hessenberg[j + 1, j] = h_next

            for i in range(j):
                upper = cos[i] * hessenberg[i, j] + sin[i] * hessenberg[i + 1, j]
                lower = -sin[i] * hessenberg[i, j] + cos[i] * hessenberg[i + 1, j]
                hessenberg[i, j], hessenberg[i + 1, j] = upper, lower
            denom = float(np.hypot(hessenberg[j, j], hessenberg[j + 1, j]))
            if denom == 0.0:
                raise Breakdown(f"singular Hessenberg column at inner step {j + 1}")
            cos[j] = hessenberg[j, j] / denom
            sin[j] = hessenberg[j + 1, j] / denom
            hessenberg[j, j] = denom
            hessenberg[j + 1, j] = 0.0
            rhs[j + 1] = -sin[j] * rhs[j]
            rhs[j] = cos[j] * rhs[j]

            steps = j + 1
            estimate = abs(rhs[j + 1]) / b_norm
            trace.residual_history.append(estimate)
            # Happy breakdown: the Krylov space is invariant, the solve is exact.
            if h_next <= np.finfo(np.float64).eps * beta or estimate <= cfg.tol:
                break
            basis[j + 1] = w / h_next

        coeffs = solve_triangular(hessenberg[:steps, :steps], rhs[:steps])
        x += basis[:steps].T @ coeffs
        logger.debug(
            "GMRES cycle finished",
            cycle=cycle + 1,
            inner_steps=steps,
            residual_estimate=trace.residual_history[-1],
        )

    trace.cycles = cfg.max_outer
    raise NoConvergence(
        "gmres", trace.inner_iterations, trace.final_residual, trace.residual_history
    )


def _pagerank_operator(g: DirectedGraph, nu: float) -> Callable[[np.ndarray], np.ndarray]:
    damping = 1.0 - nu

    def apply(x: np.ndarray) -> np.ndarray:
        if damping == 0.0:
            return x.copy()
        return x - damping * transition_apply(g, x)

    return apply


def gmres_solve(
    g: DirectedGraph,
    spec: FairnessSpec,
    jump: np.ndarray,
    cfg: KrylovConfig | None = None,
) -> tuple[ScoreVector, SolverReport]:
    """PageRank for an arbitrary jump distribution via restarted GMRES.

    The iteration starts from ``x0 = nu * jump``, so ``nu = 1`` needs no
    Krylov steps.

    Args:
        g: Graph to rank.
        spec: Supplies ``nu``.
        jump: Jump distribution of length N.
        cfg: Krylov settings; defaults when None.

    Returns:
        Tuple of (scores, report).

    Raises:
        NoConvergence: If restarts are exhausted.
        Breakdown: If the Arnoldi process fails.
    """
    cfg = cfg or KrylovConfig()
    start = time.perf_counter()
    n = g.node_count
    jump = np.asarray(jump, dtype=np.float64).reshape(-1)
    if jump.shape[0] != n:
        raise DimensionMismatch(n, jump.shape[0], "jump vector")
    if not np.all(np.isfinite(jump)) or jump.min() < 0.0 or abs(jump.sum() - 1.0) > 1e-10:
        raise ValueError("jump vector must be a probability distribution")

    b = spec.nu * jump
    x, trace = restarted_gmres(_pagerank_operator(g, spec.nu), b, b, cfg)
    scores = ScoreVector.normalized(x)
    report = SolverReport(
        method="gmres",
        outer_iterations=trace.cycles,
        inner_iterations_total=trace.inner_iterations,
        final_residual=trace.final_residual,
        wall_time_seconds=time.perf_counter() - start,
        matvec_count=trace.matvec_count,
        residual_history=tuple(trace.residual_history),
    )
    return scores, report


def parametric_jump(groups: GroupAssignment, theta: float) -> np.ndarray:
    """Jump vector ``theta * uniform(P) + (1 - theta) * uniform(U)``.

    An empty group contributes nothing and the other group takes all mass.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must be in [0, 1], got {theta}")
    if groups.protected_count == 0 or groups.unprotected_count == 0:
        return np.full(groups.node_count, 1.0 / groups.node_count)
    jump = np.zeros(groups.node_count)
    jump[groups.protected] = theta / groups.protected_count
    jump[~groups.protected] = (1.0 - theta) / groups.unprotected_count
    return jump


def fair_gmres(
    g: DirectedGraph,
    groups: GroupAssignment,
    spec: FairnessSpec,
    cfg: KrylovConfig | None = None,
) -> tuple[ScoreVector, np.ndarray, SolverReport]:
    """Fair ranking by tuning a one-parameter jump family with GMRES solves.

    Protected mass is affine in ``theta``, so solves at ``theta = 0`` and
    ``theta = 1`` give the exact ``theta`` for the target. A third solve
    confirms it; bisection takes over if round-off leaves the mass outside
    ``cfg.fairness_tol``.

    Returns:
        Tuple of (scores, jump vector, report). ``report.extra["theta"]``
        holds the chosen parameter.

    Raises:
        Infeasible: If the target lies outside the masses at theta 0 and 1.
        NoConvergence: If a GMRES solve or the bisection fallback fails.
    """
    cfg = cfg or KrylovConfig()
    start = time.perf_counter()
    if groups.node_count != g.node_count:
        raise DimensionMismatch(g.node_count, groups.node_count, "group labels")
    target = spec.resolve_target(groups)
    reports: list[SolverReport] = []

    def solve(theta: float) -> tuple[ScoreVector, np.ndarray, float]:
        jump = parametric_jump(groups, theta)
        scores, report = gmres_solve(g, spec, jump, cfg)
        reports.append(report)
        return scores, jump, protected_mass(scores, groups)

    if groups.protected_count == 0 or groups.unprotected_count == 0:
        theta = 1.0 if groups.unprotected_count == 0 else 0.0
        scores, jump, mass = solve(theta)
        if abs(mass - target) > cfg.fairness_tol:
            raise Infeasible(target, mass, mass)
    else:
        _, _, mass_low = solve(0.0)
        _, _, mass_high = solve(1.0)
        low, high = min(mass_low, mass_high), max(mass_low, mass_high)
        if not low - FEASIBILITY_SLACK <= target <= high + FEASIBILITY_SLACK:
            raise Infeasible(target, low, high)
        span = mass_high - mass_low
        theta = 0.5 if span == 0.0 else (target - mass_low) / span
        theta = min(max(theta, 0.0), 1.0)
        scores, jump, mass = solve(theta)
        if abs(mass - target) > cfg.fairness_tol:
            logger.warning(
                "Affine fairness step missed the target, bisecting",
                theta=theta,
                mass=mass,
                target=target,
            )
            scores, jump, mass, theta = _bisect_theta(
                solve, target, cfg.fairness_tol, increasing=span >= 0.0
            )

    report = SolverReport(
        method="gmres",
        outer_iterations=len(reports),
        inner_iterations_total=sum(r.inner_iterations_total for r in reports),
        final_residual=reports[-1].final_residual,
        achieved_protected_mass=mass,
        wall_time_seconds=time.perf_counter() - start,
        matvec_count=sum(r.matvec_count for r in reports),
        residual_history=reports[-1].residual_history,
        extra={"theta": theta, "target": target},
    )
    logger.info(
        "Fair GMRES solved",
        theta=theta,
        protected_mass=mass,
        target=target,
        outer=report.outer_iterations,
        inner=report.inner_iterations_total,
    )
    return scores, jump, report


def _bisect_theta(
    solve: Callable[[float], tuple[ScoreVector, np.ndarray, float]],
    target: float,
    fairness_tol: float,
    increasing: bool = True,
) -> tuple[ScoreVector, np.ndarray, float, float]:
    low, high = 0.0, 1.0
    mass = np.nan
    for _ in range(BISECTION_STEPS):
        theta = 0.5 * (low + high)
        scores, jump, mass = solve(theta)
        if abs(mass - target) <= fairness_tol:
            return scores, jump, mass, theta
        if (mass < target) == increasing:
            low = theta
        else:
            high = theta
    raise NoConvergence("fair_gmres bisection", BISECTION_STEPS, abs(mass - target))
