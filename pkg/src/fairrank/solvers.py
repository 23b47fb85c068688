"""Dispatch from method names to fair ranking solvers."""

import numpy as np

from .exact import DEFAULT_DENSE_CAP, exact_fspr
from .gmres import KrylovConfig, fair_gmres
from .graph import DirectedGraph, GroupAssignment
from .meanfield import meanfield_rank
from .scores import FairnessSpec, ScoreVector, SolverReport

METHODS = ("exact", "gmres", "meanfield", "meanfield-iterative")


def run_method(
    method: str,
    g: DirectedGraph,
    groups: GroupAssignment,
    spec: FairnessSpec,
    krylov: KrylovConfig | None = None,
    dense_cap: int = DEFAULT_DENSE_CAP,
    check_projection: bool = False,
) -> tuple[ScoreVector, SolverReport, np.ndarray | None]:
    """Run one fair ranking method.

    ``check_projection`` only affects the exact method.

    Returns:
        Tuple of (scores, report, jump vector). Mean-field methods return
        None for the jump vector.

    Raises:
        ValueError: For an unknown method name.
    """
    if method == "exact":
        scores, jump, report = exact_fspr(
            g, groups, spec, dense_cap=dense_cap, check_projection=check_projection
        )
        return scores, report, jump
    if method == "gmres":
        scores, jump, report = fair_gmres(g, groups, spec, krylov)
        return scores, report, jump
    if method in ("meanfield", "meanfield-iterative"):
        scores, report = meanfield_rank(
            g, groups, spec, iterative=method == "meanfield-iterative"
        )
        return scores, report, None
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
