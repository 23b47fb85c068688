"""Curve data comparing empirical scores with mean-field predictions.

Each builder returns flat records ready for ``write_records``; plotting is
left to the consumer.
"""

import math
from typing import Any

import numpy as np

from .graph import degree_class_index
from .metrics import DEFAULT_BIN_FACTOR, log_binned_curve


def class_means_curve(
    k_in: np.ndarray,
    k_out: np.ndarray,
    group: np.ndarray,
    empirical: np.ndarray,
    approx: np.ndarray,
) -> list[dict[str, Any]]:
    """Per degree class: mean of the approximation against the empirical mean."""
    keys, membership = degree_class_index(k_in, k_out, group)
    sizes = np.bincount(membership, minlength=keys.shape[0])
    empirical_mean = np.bincount(membership, weights=empirical, minlength=keys.shape[0]) / sizes
    approx_mean = np.bincount(membership, weights=approx, minlength=keys.shape[0]) / sizes
    return [
        {
            "k_in": int(key[0]),
            "k_out": int(key[1]),
            "group": int(key[2]),
            "size": int(size),
            "approx_mean": float(a),
            "empirical_mean": float(e),
        }
        for key, size, a, e in zip(keys, sizes, approx_mean, empirical_mean)
    ]


def indegree_curve(
    k_in: np.ndarray,
    group: np.ndarray,
    scores: np.ndarray,
    nu: float,
    target: float | None = None,
    factor: float = DEFAULT_BIN_FACTOR,
) -> list[dict[str, Any]]:
    """Log-binned mean score against in-degree per group, with the closed form.

    The prediction at bin center ``k`` is
    ``nu * t_C * k / D_C + (1 - nu) * k / M``.
    """
    k_in = np.asarray(k_in, dtype=np.float64)
    protected = np.asarray(group).astype(bool)
    scores = np.asarray(scores, dtype=np.float64)
    total_in = float(k_in.sum())
    share = float(protected.mean()) if target is None else float(target)
    records: list[dict[str, Any]] = []
    for label, mask, group_share in ((1, protected, share), (0, ~protected, 1.0 - share)):
        if not mask.any():
            continue
        group_in = float(k_in[mask].sum())
        for b in log_binned_curve(scores[mask], k_in[mask], factor):
            if total_in > 0.0 and group_in > 0.0:
                predicted = (
                    nu * group_share * b.center / group_in + (1.0 - nu) * b.center / total_in
                )
            else:
                predicted = math.nan
            records.append(
                {
                    "group": label,
                    "bin_center": b.center,
                    "bin_low": b.low,
                    "bin_high": b.high,
                    "count": b.count,
                    "mean_score": b.mean,
                    "std_score": b.std,
                    "predicted_mean": predicted,
                }
            )
    return records


def cv_curve(
    k_in: np.ndarray,
    k_out: np.ndarray,
    scores: np.ndarray,
    nu: float,
    factor: float = DEFAULT_BIN_FACTOR,
) -> list[dict[str, Any]]:
    """Log-binned coefficient of variation against in-degree, with the prediction.

    The prediction is ``(1 - nu) * sqrt(<k_in^2 / k_out> / (<k_in> * k))``;
    the moment skips nodes without out-edges.
    """
    k_in = np.asarray(k_in, dtype=np.float64)
    k_out = np.asarray(k_out, dtype=np.float64)
    eligible = k_out > 0
    mean_in = float(k_in.mean()) if k_in.size else 0.0
    moment = float(np.mean(k_in[eligible] ** 2 / k_out[eligible])) if eligible.any() else math.nan
    records: list[dict[str, Any]] = []
    for b in log_binned_curve(scores, k_in, factor):
        empirical = b.std / b.mean if b.mean > 0.0 else math.nan
        if b.center > 0.0 and mean_in > 0.0:
            predicted = (1.0 - nu) * math.sqrt(moment / (mean_in * b.center))
        else:
            predicted = math.nan
        records.append(
            {
                "bin_center": b.center,
                "bin_low": b.low,
                "bin_high": b.high,
                "count": b.count,
                "mean_score": b.mean,
                "std_score": b.std,
                "cv": empirical,
                "predicted_cv": predicted,
            }
        )
    return records
