"""Tests for simplex and simplex-slice projections."""

import numpy as np
import pytest

from fairrank.errors import NoConvergence
from fairrank.simplex import (
    dykstra_projection,
    project_affine,
    project_simplex,
    project_simplex_slice,
)


def _assert_slice_kkt(y, c, target, v, mu):
    """v must equal max(y - lam - mu c, 0) for one lam, on the slice."""
    assert v.min() >= 0.0
    assert v.sum() == pytest.approx(1.0, abs=1e-12)
    assert c @ v == pytest.approx(target, abs=1e-10)
    support = v > 0
    lam = float(np.mean((y - mu * c - v)[support]))
    np.testing.assert_allclose(v, np.maximum(y - lam - mu * c, 0.0), atol=1e-9)


class TestProjectSimplex:
    """Tests for project_simplex."""

    def test_point_on_simplex_is_fixed(self):
        y = np.array([0.2, 0.3, 0.5])

        np.testing.assert_allclose(project_simplex(y), y)

    def test_known_projections(self):
        np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
        np.testing.assert_allclose(project_simplex(np.array([0.0, 0.0, 0.0])), [1 / 3] * 3)
        np.testing.assert_allclose(project_simplex(np.array([1.0, 0.5, -3.0])), [0.75, 0.25, 0])

    def test_radius(self):
        v = project_simplex(np.array([5.0, 1.0, 1.0]), z=2.0)

        assert v.sum() == pytest.approx(2.0)
        assert v.min() >= 0.0


class TestProjectSimplexSlice:
    """Tests for project_simplex_slice."""

    @pytest.mark.parametrize("seed", range(5))
    def test_kkt_on_random_points(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(size=12)
        c = rng.uniform(0.1, 0.9, size=12)
        target = float(rng.uniform(c.min(), c.max()))

        v, mu = project_simplex_slice(y, c, target)

        _assert_slice_kkt(y, c, target, v, mu)

    def test_hint_gives_same_answer(self):
        rng = np.random.default_rng(11)
        y = rng.normal(size=20)
        c = rng.uniform(size=20)
        target = float(np.median(c))
        cold, mu = project_simplex_slice(y, c, target)

        warm, warm_mu = project_simplex_slice(y + 1e-6, c, target, mu_hint=mu)

        np.testing.assert_allclose(warm, cold, atol=1e-5)
        _assert_slice_kkt(y + 1e-6, c, target, warm, warm_mu)

    def test_target_at_upper_end(self):
        c = np.array([0.1, 0.5, 0.9])

        v, _ = project_simplex_slice(np.array([0.3, 0.3, 0.4]), c, 0.9)

        np.testing.assert_allclose(v, [0.0, 0.0, 1.0], atol=1e-9)

    def test_flat_normal_reduces_to_simplex(self):
        y = np.array([0.7, 0.1, -0.2])

        v, mu = project_simplex_slice(y, np.full(3, 0.4), 0.4)

        np.testing.assert_allclose(v, project_simplex(y))
        assert mu == 0.0


class TestDykstra:
    """Tests for the Dykstra cross-check."""

    @pytest.mark.parametrize("seed", range(3))
    def test_agrees_with_slice_projection(self, seed):
        rng = np.random.default_rng(100 + seed)
        y = rng.normal(scale=0.3, size=8)
        c = rng.uniform(0.2, 0.8, size=8)
        target = float(0.5 * (c.min() + c.max()))

        expected, _ = project_simplex_slice(y, c, target)
        v = dykstra_projection(y, c, target)

        np.testing.assert_allclose(v, expected, atol=1e-7)

    def test_iteration_cap(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=8)
        c = rng.uniform(size=8)

        with pytest.raises(NoConvergence):
            dykstra_projection(y, c, float(np.mean(c)), tol=1e-16, max_iters=2)


def test_project_affine_meets_both_constraints():
    y = np.array([0.5, -0.2, 0.9, 0.1])
    c = np.array([1.0, 0.0, 0.5, 0.25])

    v = project_affine(y, c, 0.3)

    assert v.sum() == pytest.approx(1.0)
    assert c @ v == pytest.approx(0.3)
