"""Projection oracle: bases, projections, optimality certificates."""

import numpy as np
import pytest

from quadmin import (
    GDConstant,
    InvalidQError,
    Q_ONE,
    Q_X,
    QPolynomial,
    build_krylov_basis,
    cg_classic,
    instance_optimality_report,
    krylov_project,
    problem_from_matrix,
    q_metric,
    run,
)
from quadmin.harness import run_method

from conftest import geometric_problem

X11 = np.array([1.0, 1.0])


class TestKrylovBasis:
    def test_orthonormal_in_weighted_product(self):
        p, x0 = geometric_problem(12, 10.0, seed=0)
        for q in (Q_ONE, Q_X):
            basis = build_krylov_basis(p, x0, 8, q)
            gram = basis.columns.T @ np.column_stack(
                [q.apply(p.H, c) for c in basis.columns.T])
            np.testing.assert_allclose(gram, np.eye(basis.effective_rank),
                                       atol=1e-10)

    def test_rank_stops_at_distinct_eigenvalues(self, diag13):
        basis = build_krylov_basis(diag13, X11, 10)
        assert basis.effective_rank == 2

    def test_rank_limited_by_distinct_eigenvalues(self):
        # repeated eigenvalue: three dimensions, only two reachable directions
        p = problem_from_matrix(np.diag([1.0, 1.0, 3.0]))
        basis = build_krylov_basis(p, np.array([1.0, 2.0, 1.0]), 10)
        assert basis.effective_rank == 2

    def test_zero_error_gives_empty_basis(self, diag13):
        basis = build_krylov_basis(diag13, diag13.x_star, 3)
        assert basis.effective_rank == 0


class TestKrylovProject:
    def test_identity_projects_to_minimizer_at_zero(self, identity2):
        np.testing.assert_allclose(krylov_project(identity2, X11, 0),
                                   identity2.x_star, atol=1e-14)

    def test_diagonal_order_zero(self, diag13):
        # frozen one-variable least squares: min_c ||(1,1) - c (1,3)||^2
        np.testing.assert_allclose(krylov_project(diag13, X11, 0),
                                   [0.6, -0.2], atol=1e-14)

    def test_diagonal_order_one_full_span(self, diag13):
        np.testing.assert_allclose(krylov_project(diag13, X11, 1),
                                   [0.0, 0.0], atol=1e-14)

    def test_full_rank_idempotent(self):
        p, x0 = geometric_problem(8, 10.0, seed=2)
        e0 = np.linalg.norm(x0 - p.x_star)
        for t in (8, 12, 20):
            x = krylov_project(p, x0, t)
            assert np.linalg.norm(x - p.x_star) <= 1e-9 * e0

    def test_projection_certificate(self):
        # the projected error is weighted-orthogonal to every basis vector
        p, x0 = geometric_problem(10, 10.0, seed=3)
        for q in (Q_ONE, Q_X):
            q_norm = float(np.max(np.abs(q(p.eigenvalues))))
            for t in (0, 2, 5):
                x = krylov_project(p, x0, t, q)
                basis = build_krylov_basis(p, x0, t, q)
                resid = q.apply(p.H, x - p.x_star)
                e_norm = np.linalg.norm(x - p.x_star)
                for v in basis.columns.T:
                    bound = 1e-9 * q_norm * max(e_norm, 1e-30) * np.linalg.norm(v)
                    assert abs(resid @ v) <= max(bound, 1e-13 * q_norm)

    def test_nested_metrics_decrease(self):
        p, x0 = geometric_problem(10, 30.0, seed=4)
        for q in (Q_ONE, Q_X):
            values = [q_metric(p, krylov_project(p, x0, t, q), q) for t in range(9)]
            for a, b in zip(values, values[1:]):
                assert b <= a * (1 + 1e-12)

    def test_invalid_q_rejected(self, diag13):
        with pytest.raises(InvalidQError):
            krylov_project(diag13, X11, 1, QPolynomial((-1.0,)))
        with pytest.raises(InvalidQError):
            # zero at a strictly positive active eigenvalue: (X - 1) at lam = 1
            krylov_project(diag13, X11, 1, QPolynomial((-1.0, 1.0)))

    def test_projection_from_minimizer(self, diag13):
        np.testing.assert_allclose(krylov_project(diag13, diag13.x_star, 2),
                                   diag13.x_star, atol=1e-15)


class TestInstanceOptimalityReport:
    def test_adaptive_deviations_small(self):
        p, x0 = geometric_problem(25, 10.0, seed=0)
        traj = run_method("hb-polyak", p, x0, 25)
        recs = instance_optimality_report(p, x0, 25, Q_ONE, traj)
        assert recs, "report should not be empty"
        assert max(r.deviation for r in recs) <= 1e-6

    def test_cg_metric_gap_small(self):
        p, x0 = geometric_problem(25, 10.0, seed=0)
        traj = cg_classic(p, x0, 25)
        recs = instance_optimality_report(p, x0, 25, Q_X, traj)
        assert max(r.q_gap for r in recs) <= 1e-8

    def test_gd_deviations_strictly_positive(self):
        p, x0 = geometric_problem(5, 10.0, seed=5)
        traj = run(GDConstant(), p, x0, 8)
        recs = instance_optimality_report(p, x0, 8, Q_ONE, traj)
        for r in recs:
            if r.t >= 2:
                assert r.deviation > 1e-9

    def test_empty_when_starting_at_minimizer(self, diag13):
        traj = run(GDConstant(), diag13, diag13.x_star.copy(), 3)
        assert instance_optimality_report(diag13, diag13.x_star, 3, Q_ONE, traj) == []


class TestQMetric:
    def test_matches_quadratic_forms(self, diag13):
        x = np.array([2.0, -1.0])
        e = x - diag13.x_star
        assert q_metric(diag13, x, Q_ONE) == pytest.approx(float(e @ e))
        assert q_metric(diag13, x, Q_X) == pytest.approx(float(e @ diag13.H @ e))

    def test_zero_hessian_component(self):
        # singular H: kernel direction is invisible to the X-weighted metric
        p = problem_from_matrix(np.diag([0.0, 2.0]))
        x = np.array([3.0, 0.0])
        assert q_metric(p, x, Q_X) == pytest.approx(0.0)
        assert q_metric(p, x, Q_ONE) == pytest.approx(9.0)
