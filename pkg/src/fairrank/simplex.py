"""Euclidean projections onto the probability simplex and its slices."""

import numpy as np

from .errors import NoConvergence
from .logging_config import get_logger

logger = get_logger(__name__)

FLAT_TOL = 1e-15


def project_simplex(y: np.ndarray, z: float = 1.0) -> np.ndarray:
    """Project ``y`` onto ``{v >= 0, sum(v) = z}`` (sort-based, O(n log n)).

    Args:
        y: Point to project.
        z: Simplex radius.

    Returns:
        The projected point.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    u = np.sort(y)[::-1]
    cssv = np.cumsum(u) - z
    ind = np.arange(1, y.shape[0] + 1)
    rho = np.count_nonzero(u - cssv / ind > 0)
    theta = cssv[rho - 1] / rho
    return np.maximum(y - theta, 0.0)


def _slice_mass(y: np.ndarray, c: np.ndarray, mu: float) -> tuple[float, np.ndarray]:
    v = project_simplex(y - mu * c)
    return float(c @ v), v


def _polish_on_support(
    y: np.ndarray, c: np.ndarray, target: float, support: np.ndarray
) -> tuple[np.ndarray, float] | None:
    """Solve the two KKT multipliers exactly on a fixed support.

    Returns None when the support is degenerate or the KKT signs fail.
    """
    if not support.any():
        return None
    ys, cs = y[support], c[support]
    system = np.array([[support.sum(), cs.sum()], [cs.sum(), cs @ cs]], dtype=np.float64)
    rhs = np.array([ys.sum() - 1.0, cs @ ys - target])
    if abs(np.linalg.det(system)) <= 1e-12 * max(1.0, float(np.abs(system).max()) ** 2):
        return None
    lam, mu = np.linalg.solve(system, rhs)
    v = y - lam - mu * c
    if v[support].min() < -1e-13 or ((~support).any() and v[~support].max() > 1e-13):
        return None
    v[~support] = 0.0
    return np.maximum(v, 0.0), float(mu)


def project_simplex_slice(
    y: np.ndarray,
    c: np.ndarray,
    target: float,
    tol: float = 1e-15,
    max_iters: int = 400,
    mu_hint: float | None = None,
) -> tuple[np.ndarray, float]:
    """Project ``y`` onto ``{v >= 0, sum(v) = 1, c @ v = target}``.

    The minimizer has the form ``v = max(y - lam - mu * c, 0)``. For fixed
    ``mu`` the simplex projection fixes ``lam``, and ``c @ v(mu)`` is
    nonincreasing in ``mu``, so ``mu`` is found by bisection. Once the
    support is identified the multipliers are solved exactly on it.

    Args:
        y: Point to project.
        c: Hyperplane normal (per-node protected mass of a unit jump).
        target: Required value of ``c @ v``; must lie in ``[min c, max c]``.
        tol: Bisection stops once ``|c @ v - target| <= tol``.
        max_iters: Bisection iteration cap.
        mu_hint: Multiplier from a nearby projection. Iterative callers
            pass the previous value back in, which usually identifies the
            support on the first try.

    Returns:
        Tuple of (projected point, multiplier ``mu``).
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    c_min, c_max = float(c.min()), float(c.max())
    if c_max - c_min <= FLAT_TOL * max(1.0, abs(c_max)):
        return project_simplex(y), 0.0

    target = min(max(target, c_min), c_max)
    center = 0.0 if mu_hint is None else float(mu_hint)
    if mu_hint is not None:
        polished = _polish_on_support(y, c, target, project_simplex(y - center * c) > 0.0)
        if polished is not None:
            return polished

    width = (1.0 + float(np.ptp(y))) / (c_max - c_min)
    mu_low, mu_high = center - width, center + width
    for _ in range(200):
        if _slice_mass(y, c, mu_low)[0] >= target:
            break
        mu_low = center - 2.0 * (center - mu_low)
    for _ in range(200):
        if _slice_mass(y, c, mu_high)[0] <= target:
            break
        mu_high = center + 2.0 * (mu_high - center)

    mu = mu_low
    v = project_simplex(y - mu * c)
    for _ in range(max_iters):
        mu = 0.5 * (mu_low + mu_high)
        mass, v = _slice_mass(y, c, mu)
        polished = _polish_on_support(y, c, target, v > 0.0)
        if polished is not None:
            return polished
        if abs(mass - target) <= tol or mu_high - mu_low <= 1e-18 * max(1.0, abs(mu)):
            break
        if mass > target:
            mu_low = mu
        else:
            mu_high = mu
    return v, mu


def project_affine(y: np.ndarray, c: np.ndarray, target: float) -> np.ndarray:
    """Project ``y`` onto ``{sum(v) = 1, c @ v = target}`` (no sign constraint)."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    ones = np.ones_like(y)
    if float(np.ptp(c)) <= FLAT_TOL * max(1.0, float(np.abs(c).max())):
        return y + (1.0 - y.sum()) / y.shape[0]
    a = np.vstack((ones, c))
    residual = a @ y - np.array([1.0, target])
    return y - a.T @ np.linalg.solve(a @ a.T, residual)


def dykstra_projection(
    y: np.ndarray,
    c: np.ndarray,
    target: float,
    tol: float = 1e-12,
    max_iters: int = 100_000,
) -> np.ndarray:
    """Dykstra alternating projection onto the simplex slice.

    Alternates the simplex projection with the affine projection onto
    ``{sum(v) = 1, c @ v = target}``, carrying Dykstra's correction terms so
    the limit is the Euclidean projection of ``y`` onto the intersection.

    Raises:
        NoConvergence: If successive iterates still move more than ``tol``.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    x = y.copy()
    p = np.zeros_like(y)
    q = np.zeros_like(y)
    change = np.inf
    for iteration in range(1, max_iters + 1):
        z = project_simplex(x + p)
        p = x + p - z
        w = z + q
        x_new = project_affine(w, c, target)
        q = z + q - x_new
        change = float(np.abs(x_new - x).max())
        x = x_new
        if change <= tol and float(np.abs(z - x).max()) <= tol:
            logger.debug("Dykstra projection converged", iterations=iteration)
            return np.maximum(x, 0.0)
    raise NoConvergence("dykstra_projection", max_iters, change)
