"""Score vectors, fairness parameters and solver reports shared by all rankers."""

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DimensionMismatch
from .graph import GroupAssignment

NORMALIZATION_TOL = 1e-10
NEGATIVE_CLIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Length-N nonnegative ranking scores summing to one.

    Attributes:
        scores: Read-only score array.
    """

    scores: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.scores, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ValueError("score vector is empty")
        if not np.all(np.isfinite(values)):
            raise ValueError("score vector contains non-finite values")
        if values.min() < 0.0:
            raise ValueError(f"score vector has negative entry {values.min():.3e}")
        total = float(values.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"score vector sums to {total!r}, expected 1")
        values.setflags(write=False)
        object.__setattr__(self, "scores", values)

    @classmethod
    def normalized(cls, values: np.ndarray) -> "ScoreVector":
        """Build a ScoreVector by clipping round-off negatives and rescaling.

        Args:
            values: Unnormalized nonnegative scores.

        Returns:
            ScoreVector proportional to ``values``.

        Raises:
            ValueError: If an entry is materially negative or the total is zero.
        """
        arr = np.asarray(values, dtype=np.float64).reshape(-1)
        scale = max(float(np.abs(arr).max(initial=0.0)), 1.0)
        if arr.size and arr.min() < -NEGATIVE_CLIP_TOL * scale:
            raise ValueError(f"cannot normalize negative score {arr.min():.3e}")
        arr = np.maximum(arr, 0.0)
        total = float(arr.sum())
        if total <= 0.0:
            raise ValueError("cannot normalize an all-zero score vector")
        return cls(arr / total)

    def __len__(self) -> int:
        return int(self.scores.shape[0])

    def __getitem__(self, index):
        return self.scores[index]

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return self.scores if dtype is None else self.scores.astype(dtype)


@dataclass(frozen=True)
class FairnessSpec:
    """Teleport probability and protected-mass target.

    Attributes:
        nu: Teleport probability in (0, 1].
        target: Target protected mass; None means the protected node
            fraction phi of the graph being ranked.
    """

    nu: float = 0.15
    target: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.nu <= 1.0:
            raise ValueError(f"nu must be in (0, 1], got {self.nu}")
        if self.target is not None and not 0.0 <= self.target <= 1.0:
            raise ValueError(f"target must be in [0, 1], got {self.target}")

    def resolve_target(self, groups: GroupAssignment) -> float:
        """Return the explicit target or the graph's protected fraction."""
        return groups.phi if self.target is None else float(self.target)


@dataclass
class SolverReport:
    """Diagnostics for one solver run.

    Attributes:
        method: Solver name (exact, gmres, meanfield, ...).
        outer_iterations: Outer steps (fairness solves, QP iterations).
        inner_iterations_total: Inner iterations summed over outer steps.
        final_residual: Residual at termination.
        achieved_protected_mass: Protected mass of the returned scores.
        wall_time_seconds: Elapsed wall-clock time.
        matvec_count: Sparse matrix-vector products performed.
        residual_history: Residual after each (inner) iteration.
        extra: Method-specific scalars (theta, objective, ...).
    """

    method: str
    outer_iterations: int = 0
    inner_iterations_total: int = 0
    final_residual: float = 0.0
    achieved_protected_mass: float = math.nan
    wall_time_seconds: float = 0.0
    matvec_count: int = 0
    residual_history: tuple[float, ...] = ()
    extra: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Flatten to a key-value record for report files."""
        record: dict[str, Any] = {
            "method": self.method,
            "outer_iterations": self.outer_iterations,
            "inner_iterations_total": self.inner_iterations_total,
            "final_residual": self.final_residual,
            "achieved_protected_mass": self.achieved_protected_mass,
            "wall_time_seconds": self.wall_time_seconds,
            "matvec_count": self.matvec_count,
            "residual_history_length": len(self.residual_history),
        }
        for key, value in self.extra.items():
            record[key] = value.item() if isinstance(value, np.generic) else value
        return record


def protected_mass(p: ScoreVector | np.ndarray, groups: GroupAssignment) -> float:
    """Total score held by protected nodes.

    Args:
        p: Length-N scores.
        groups: Group labels.

    Returns:
        Sum of ``p`` over protected nodes.
    """
    values = np.asarray(p, dtype=np.float64).reshape(-1)
    if values.shape[0] != groups.node_count:
        raise DimensionMismatch(groups.node_count, values.shape[0], "score vector")
    return float(values[groups.protected].sum())
