"""Tests for the exact fair ranking and the dense PageRank helpers."""

import itertools

import numpy as np
import pytest

from fairrank.errors import GraphTooLargeForDense, Infeasible
from fairrank.exact import (
    achievable_mass_range,
    build_resolvent,
    dense_transition,
    exact_fspr,
    pagerank_power,
    transition_apply,
)
from fairrank.gmres import gmres_solve
from fairrank.graph import GroupAssignment, build_graph
from fairrank.scores import FairnessSpec
from fairrank.simplex import project_simplex_slice

# Two mirrored three-node groups joined by one edge each way, so the
# uniform-jump protected mass is exactly one half.
EDGES = [
    (0, 1), (1, 2), (2, 0), (1, 0), (2, 1), (0, 5),
    (3, 4), (4, 5), (5, 3), (4, 3), (5, 4), (3, 2),
]


@pytest.fixture
def graph():
    return build_graph(EDGES)


@pytest.fixture
def groups(graph):
    return GroupAssignment.from_labels([0, 0, 0, 1, 1, 1], graph)


def brute_force_fair_scores(q, anchor, c, target):
    """Enumerate supports and keep the best feasible KKT point."""
    n = q.shape[0]
    best, best_value = None, np.inf
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            s = list(support)
            qs = q[s, :]
            a = np.vstack((np.ones(size), c[s]))
            kkt = np.block([[2.0 * qs @ qs.T, a.T], [a, np.zeros((2, 2))]])
            rhs = np.concatenate((2.0 * qs @ anchor, [1.0, target]))
            solution = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            v = np.zeros(n)
            v[s] = solution[:size]
            if v.min() < -1e-12 or abs(v.sum() - 1.0) > 1e-9 or abs(c @ v - target) > 1e-9:
                continue
            value = float(np.sum((v @ q - anchor) ** 2))
            if value < best_value:
                best, best_value = v, value
    return best @ q


def random_graph(rng, n, density):
    """Erdos-Renyi digraph without self-loops; sparse draws leave dangling nodes."""
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    return build_graph(np.argwhere(mask), node_count=n)


def dense_pagerank(g, nu, jump):
    """Solve ``(I - (1 - nu) P.T) x = nu * jump`` with P built from the edge list."""
    n = g.node_count
    adjacency = np.zeros((n, n))
    adjacency[g.sources, g.targets] = 1.0
    out_degree = adjacency.sum(axis=1)
    transition = np.where(
        out_degree[:, None] > 0, adjacency / np.maximum(out_degree, 1.0)[:, None], 1.0 / n
    )
    return np.linalg.solve(np.eye(n) - (1.0 - nu) * transition.T, nu * jump)


class TestPageRankHelpers:
    """Tests for transition_apply, pagerank_power and the resolvent."""

    def test_transition_preserves_mass(self, graph):
        x = np.arange(1, 7, dtype=float)

        assert transition_apply(graph, x).sum() == pytest.approx(x.sum())

    def test_transition_matches_dense(self):
        g = build_graph([(0, 1), (0, 2), (1, 2)], node_count=4)
        x = np.array([0.1, 0.2, 0.3, 0.4])

        np.testing.assert_allclose(transition_apply(g, x), dense_transition(g).T @ x)

    def test_resolvent_rows_are_distributions(self, graph):
        q = build_resolvent(graph, FairnessSpec(nu=0.15)).q

        assert q.min() >= 0.0
        np.testing.assert_allclose(q.sum(axis=1), 1.0)

    def test_power_iteration_matches_resolvent(self, graph):
        spec = FairnessSpec(nu=0.15)
        resolvent = build_resolvent(graph, spec)

        scores, report = pagerank_power(graph, spec)

        np.testing.assert_allclose(scores.scores, resolvent.scores(np.full(6, 1 / 6)), atol=1e-10)
        assert report.method == "power"
        assert report.final_residual <= 1e-12

    def test_dense_cap(self, graph):
        with pytest.raises(GraphTooLargeForDense) as excinfo:
            build_resolvent(graph, FairnessSpec(), dense_cap=5)

        assert excinfo.value.exit_code == 4

    def test_solvers_match_dense_solve_on_random_graphs(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            n = int(rng.integers(5, 201))
            g = random_graph(rng, n, density=float(rng.uniform(0.5, 6.0)) / n)
            spec = FairnessSpec(nu=float(rng.uniform(0.05, 0.5)))
            jump = rng.dirichlet(np.ones(n))
            expected = dense_pagerank(g, spec.nu, jump)

            power, _ = pagerank_power(g, spec, jump)
            krylov, _ = gmres_solve(g, spec, jump)

            np.testing.assert_allclose(krylov.scores, expected, rtol=0.0, atol=1e-8)
            np.testing.assert_allclose(power.scores, expected, rtol=0.0, atol=1e-8)


class TestExactFairRanking:
    """Tests for exact_fspr."""

    @pytest.mark.parametrize("target", [0.3, 0.5, 0.6])
    def test_matches_brute_force(self, graph, groups, target):
        spec = FairnessSpec(nu=0.15, target=target)
        resolvent = build_resolvent(graph, spec)
        anchor = resolvent.scores(np.full(6, 1 / 6))
        c = resolvent.unit_jump_mass(groups)
        if not c.min() <= target <= c.max():
            pytest.skip("target outside the achievable range of this graph")

        scores, jump, report = exact_fspr(graph, groups, spec)

        expected = brute_force_fair_scores(resolvent.q, anchor, c, target)
        np.testing.assert_allclose(scores.scores, expected, atol=1e-6)
        assert report.achieved_protected_mass == pytest.approx(target, abs=1e-8)
        assert jump.min() >= 0.0
        assert jump.sum() == pytest.approx(1.0)

    def test_default_target_is_phi(self, graph, groups):
        scores, _, report = exact_fspr(graph, groups, FairnessSpec())

        assert report.extra["target"] == pytest.approx(0.5)
        assert scores.scores[groups.protected].sum() == pytest.approx(0.5, abs=1e-8)

    def test_pagerank_target_returns_pagerank(self, graph, groups):
        """Test that asking for PageRank's own protected mass changes nothing."""
        spec = FairnessSpec(nu=0.15)
        pagerank, _ = pagerank_power(graph, spec)
        target = float(pagerank.scores[groups.protected].sum())

        scores, _, report = exact_fspr(graph, groups, FairnessSpec(nu=0.15, target=target))

        np.testing.assert_allclose(scores.scores, pagerank.scores, atol=1e-7)
        assert report.extra["objective"] == pytest.approx(0.0, abs=1e-12)
        assert report.extra["pagerank_protected_mass"] == pytest.approx(target)

    def test_infeasible_target(self, graph, groups):
        resolvent = build_resolvent(graph, FairnessSpec())
        _, high = achievable_mass_range(resolvent, groups)

        with pytest.raises(Infeasible) as excinfo:
            exact_fspr(graph, groups, FairnessSpec(target=min(1.0, high + 0.05)))

        assert excinfo.value.exit_code == 3

    def test_single_group_graph(self, graph):
        """Test that an all-unprotected graph only allows target zero."""
        groups = GroupAssignment.from_labels([0] * 6, graph)

        scores, _, report = exact_fspr(graph, groups, FairnessSpec(target=0.0))

        assert report.achieved_protected_mass == 0.0
        with pytest.raises(Infeasible):
            exact_fspr(graph, groups, FairnessSpec(target=0.2))

    def test_teleport_one_gives_jump_as_scores(self, graph, groups):
        scores, jump, _ = exact_fspr(graph, groups, FairnessSpec(nu=1.0, target=0.7))

        np.testing.assert_allclose(scores.scores, jump, atol=1e-9)
        np.testing.assert_allclose(scores.scores[groups.protected], 0.7 / 3, atol=1e-8)

    def test_relaxed_objective_is_no_worse(self, graph, groups):
        spec = FairnessSpec(nu=0.15, target=0.6)

        _, _, strict = exact_fspr(graph, groups, spec)
        scores, jump, relaxed = exact_fspr(graph, groups, spec, allow_negative_jump=True)

        assert relaxed.extra["objective"] <= strict.extra["objective"] + 1e-10
        assert relaxed.achieved_protected_mass == pytest.approx(0.6)
        assert jump.sum() == pytest.approx(1.0)
        assert scores.scores.min() >= 0.0

    def test_feasible_perturbations_never_lower_the_objective(self):
        rng = np.random.default_rng(7)
        n = 80
        g = random_graph(rng, n, density=4.0 / n)
        labels = np.zeros(n, dtype=np.int64)
        labels[rng.choice(n, size=24, replace=False)] = 1
        groups = GroupAssignment.from_labels(labels, g)
        resolvent = build_resolvent(g, FairnessSpec(nu=0.15))
        low, high = achievable_mass_range(resolvent, groups)
        target = low + 0.4 * (high - low)
        anchor = resolvent.scores(np.full(n, 1.0 / n))
        c = resolvent.unit_jump_mass(groups)

        _, jump, report = exact_fspr(g, groups, FairnessSpec(nu=0.15, target=target))

        def objective(v):
            return float(np.sum((resolvent.scores(v) - anchor) ** 2))

        assert report.achieved_protected_mass == pytest.approx(target, abs=1e-6)
        best = objective(jump)
        for scale in rng.choice([1e-4, 1e-3, 1e-2, 1e-1], size=1000):
            candidate, _ = project_simplex_slice(jump + rng.normal(scale=scale, size=n), c, target)
            assert objective(candidate) >= best - 1e-9

    def test_projection_cross_check(self, graph, groups):
        spec = FairnessSpec(nu=0.15, target=0.3)

        _, _, checked = exact_fspr(graph, groups, spec, check_projection=True)
        _, _, relaxed = exact_fspr(
            graph, groups, spec, allow_negative_jump=True, check_projection=True
        )

        assert checked.extra["projection_deviation"] <= 1e-8
        assert "projection_deviation" not in relaxed.extra
