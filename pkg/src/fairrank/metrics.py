"""Accuracy and fairness metrics for comparing score vectors."""

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegenerateInput, DimensionMismatch
from .graph import Group, GroupAssignment
from .logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_TOPK = (50, 100, 200)
DEFAULT_BIN_FACTOR = 1.05


def _pair(
    x: Sequence[float] | np.ndarray, y: Sequence[float] | np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(a.shape[0], b.shape[0], "second vector")
    return a, b


def utility_loss(approx: np.ndarray, exact: np.ndarray) -> float:
    """Mean absolute deviation ``(1/N) sum |approx - exact|``."""
    a, b = _pair(approx, exact)
    return float(np.abs(a - b).mean())


def fairness_gap(
    p: np.ndarray,
    groups: GroupAssignment,
    target: float | None = None,
    group: Group = Group.PROTECTED,
) -> float:
    """Deviation of a group's total score from its desired share.

    Args:
        p: Scores.
        groups: Group labels.
        target: Desired protected share; phi when None. The unprotected
            group's share is ``1 - target``.
        group: Which group to measure.
    """
    values = np.asarray(p, dtype=np.float64).reshape(-1)
    if values.shape[0] != groups.node_count:
        raise DimensionMismatch(groups.node_count, values.shape[0], "score vector")
    share = groups.phi if target is None else float(target)
    if group is Group.PROTECTED:
        return abs(float(values[groups.protected].sum()) - share)
    return abs(float(values[~groups.protected].sum()) - (1.0 - share))


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation coefficient.

    Raises:
        DegenerateInput: If fewer than two values or either input is constant.
    """
    a, b = _pair(x, y)
    if a.shape[0] < 2:
        raise DegenerateInput("correlation needs at least two values")
    da = a - a.mean()
    db = b - b.mean()
    norm = math.sqrt(float(da @ da) * float(db @ db))
    if norm == 0.0:
        raise DegenerateInput("correlation undefined for a constant input")
    return max(-1.0, min(1.0, float(da @ db) / norm))


def _tied_pairs(*columns: np.ndarray) -> int:
    if len(columns) == 1:
        _, counts = np.unique(columns[0], return_counts=True)
    else:
        _, counts = np.unique(np.column_stack(columns), axis=0, return_counts=True)
    counts = counts.astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def count_inversions(values: np.ndarray) -> int:
    """Number of pairs ``i < j`` with ``values[i] > values[j]``.

    Bottom-up merge sort; each level merges all block pairs at once by
    offsetting values with their pair index and sorting.
    """
    _, ranks = np.unique(np.asarray(values).reshape(-1), return_inverse=True)
    arr = ranks.reshape(-1).astype(np.int64)
    n = arr.shape[0]
    position = np.arange(n, dtype=np.int64)
    total = 0
    width = 1
    while width < n:
        pair = position // (2 * width)
        in_right = (position // width) % 2 == 1
        keys = pair * n + arr
        left_keys = keys[~in_right]
        right_keys = keys[in_right]
        left_end = np.searchsorted(left_keys, (pair[in_right] + 1) * n, side="left")
        not_greater = np.searchsorted(left_keys, right_keys, side="right")
        total += int((left_end - not_greater).sum())
        arr = np.sort(keys) - pair * n
        width *= 2
    return total


def kendall_tau(x: np.ndarray, y: np.ndarray) -> float:
    """Kendall's tau-b in O(n log n).

    Pairs are sorted by ``(x, y)``; the discordant count is then the number
    of inversions in ``y``. Ties in ``x``, ``y`` and both are corrected for.

    Raises:
        DegenerateInput: If fewer than two values or either input is constant.
    """
    a, b = _pair(x, y)
    n = a.shape[0]
    if n < 2:
        raise DegenerateInput("correlation needs at least two values")
    order = np.lexsort((b, a))
    a, b = a[order], b[order]
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(a)
    n2 = _tied_pairs(b)
    n3 = _tied_pairs(a, b)
    if n1 == n0 or n2 == n0:
        raise DegenerateInput("correlation undefined for a constant input")
    swaps = count_inversions(b)
    tau = (n0 - n1 - n2 + n3 - 2 * swaps) / math.sqrt(float(n0 - n1) * float(n0 - n2))
    return max(-1.0, min(1.0, tau))


def lp_distance(x: np.ndarray, y: np.ndarray, p: int = 1) -> float:
    """L1 or L2 distance between two vectors."""
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p}")
    a, b = _pair(x, y)
    return float(np.linalg.norm(a - b, ord=p))


def top_k_nodes(x: np.ndarray, k: int) -> np.ndarray:
    """Ids of the ``k`` highest scores, ties broken by ascending id."""
    values = np.asarray(x, dtype=np.float64).reshape(-1)
    return np.lexsort((np.arange(values.shape[0]), -values))[:k]


def topk_overlap(x: np.ndarray, y: np.ndarray, k: int) -> float:
    """Fraction of shared nodes among the top ``k`` of both rankings."""
    a, b = _pair(x, y)
    if not 1 <= k <= a.shape[0]:
        raise ValueError(f"k must be in [1, {a.shape[0]}], got {k}")
    shared = np.intersect1d(top_k_nodes(a, k), top_k_nodes(b, k), assume_unique=True)
    return shared.shape[0] / k


@dataclass(frozen=True)
class CurveBin:
    """One logarithmic in-degree bin.

    ``low`` and ``high`` are the bin edges ``[low, high)``; the zero bin has
    both edges and the center at 0.
    """

    center: float
    low: float
    high: float
    mean: float
    std: float
    count: int


def log_bin_index(keys: np.ndarray, factor: float) -> np.ndarray:
    """Bin index ``b`` with ``factor**b <= key < factor**(b + 1)``; -1 for key 0."""
    keys = np.asarray(keys, dtype=np.float64).reshape(-1)
    index = np.full(keys.shape[0], -1, dtype=np.int64)
    positive = keys > 0
    logs = np.floor(np.log(keys[positive]) / math.log(factor)).astype(np.int64)
    # Guard float error at exact powers of the factor.
    logs[factor ** (logs + 1) <= keys[positive]] += 1
    logs[factor**logs > keys[positive]] -= 1
    index[positive] = logs
    return index


def log_binned_curve(
    values: np.ndarray, keys: np.ndarray, factor: float = DEFAULT_BIN_FACTOR
) -> list[CurveBin]:
    """Mean and population std of ``values`` over logarithmic bins of ``keys``.

    Bin edges are ``1, factor, factor**2, ...``. Keys of 0 go to a separate
    bin reported first.

    Args:
        values: Per-node values (usually scores).
        keys: Per-node nonnegative integer keys (usually in-degrees).
        factor: Edge multiplication factor, > 1.

    Returns:
        Nonempty bins in ascending key order.
    """
    if not factor > 1.0:
        raise ValueError(f"factor must be > 1, got {factor}")
    vals, ks = _pair(values, keys)
    if ks.size and ks.min() < 0:
        raise ValueError("bin keys must be nonnegative")
    index = log_bin_index(ks, factor)
    curve: list[CurveBin] = []
    for b in np.unique(index):
        members = vals[index == b]
        if b < 0:
            low = high = center = 0.0
        else:
            low, high = factor ** float(b), factor ** float(b + 1)
            center = math.sqrt(low * high)
        curve.append(
            CurveBin(
                center=center,
                low=low,
                high=high,
                mean=float(members.mean()),
                std=float(members.std()),
                count=int(members.shape[0]),
            )
        )
    return curve


def degree_correlation(
    p: np.ndarray, in_degree: np.ndarray, factor: float = DEFAULT_BIN_FACTOR
) -> tuple[float, float]:
    """Pearson correlation of scores with in-degree, raw and over log bins.

    The binned value correlates bin centers with bin mean scores and skips
    the zero bin. Undefined correlations come back as NaN.
    """
    try:
        raw = pearson(p, in_degree)
    except DegenerateInput:
        raw = math.nan
    bins = [b for b in log_binned_curve(p, in_degree, factor) if b.center > 0.0]
    try:
        binned = pearson([b.center for b in bins], [b.mean for b in bins])
    except DegenerateInput:
        binned = math.nan
    return raw, binned


@dataclass
class ComparisonReport:
    """Metrics comparing an approximate ranking to a baseline.

    Attributes:
        utility_loss: Mean absolute deviation from the baseline.
        fairness_gap: Protected-share deviation of the approximation.
        pearson: Pearson correlation with the baseline.
        kendall_tau: Kendall tau-b with the baseline.
        l1_distance: L1 distance to the baseline.
        l2_distance: L2 distance to the baseline.
        protected_mass_delta: Protected mass of approx minus baseline.
        topk_overlap: Top-K overlap per K.
        rho_indegree_raw: Pearson of approx scores with in-degree.
        rho_indegree_binned: Same over log-binned means.
    """

    utility_loss: float
    fairness_gap: float
    pearson: float
    kendall_tau: float
    l1_distance: float
    l2_distance: float
    protected_mass_delta: float
    topk_overlap: dict[int, float] = field(default_factory=dict)
    rho_indegree_raw: float = math.nan
    rho_indegree_binned: float = math.nan

    def to_dict(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "utility_loss": self.utility_loss,
            "fairness_gap": self.fairness_gap,
            "pearson": self.pearson,
            "kendall_tau": self.kendall_tau,
            "l1_distance": self.l1_distance,
            "l2_distance": self.l2_distance,
            "protected_mass_delta": self.protected_mass_delta,
        }
        for k, overlap in sorted(self.topk_overlap.items()):
            record[f"top{k}_overlap"] = overlap
        record["rho_indegree_raw"] = self.rho_indegree_raw
        record["rho_indegree_binned"] = self.rho_indegree_binned
        return record


def compare_scores(
    baseline: np.ndarray,
    approx: np.ndarray,
    groups: GroupAssignment,
    target: float | None = None,
    in_degree: np.ndarray | None = None,
    ks: Sequence[int] = DEFAULT_TOPK,
    factor: float = DEFAULT_BIN_FACTOR,
) -> ComparisonReport:
    """Compute every comparison metric of ``approx`` against ``baseline``.

    Top-K sizes above N are capped at N. Correlations that are undefined
    for the inputs are reported as NaN.
    """
    base, appr = _pair(baseline, approx)
    n = base.shape[0]
    overlaps = {min(k, n): topk_overlap(base, appr, min(k, n)) for k in ks if k >= 1}

    def safe(metric, *args) -> float:
        try:
            return metric(*args)
        except DegenerateInput as e:
            logger.warning("Correlation undefined", metric=metric.__name__, reason=str(e))
            return math.nan

    rho_raw = rho_binned = math.nan
    if in_degree is not None:
        rho_raw, rho_binned = degree_correlation(appr, in_degree, factor)
    report = ComparisonReport(
        utility_loss=utility_loss(appr, base),
        fairness_gap=fairness_gap(appr, groups, target),
        pearson=safe(pearson, appr, base),
        kendall_tau=safe(kendall_tau, appr, base),
        l1_distance=lp_distance(appr, base, 1),
        l2_distance=lp_distance(appr, base, 2),
        protected_mass_delta=float(appr[groups.protected].sum() - base[groups.protected].sum()),
        topk_overlap=overlaps,
        rho_indegree_raw=rho_raw,
        rho_indegree_binned=rho_binned,
    )
    logger.debug("Compared score vectors", nodes=n, pearson=report.pearson)
    return report
