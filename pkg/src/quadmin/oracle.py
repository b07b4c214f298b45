"""Brute-force Krylov projection oracle.

Every gradient-span method satisfies x_{t+1} in x_0 + span{grad f(x_0), ...,
grad f(x_t)}, and on a quadratic that span equals H applied to the Krylov
space of e_0 = x_0 - x_star. The oracle minimizes an arbitrary
Q(H)-weighted error metric over that affine subspace by explicit
orthogonal projection, with no recursion shared with the fast solvers.
That independence is the point: it certifies them.

Cost is O(d t^2) per call and each call rebuilds its basis from scratch;
clarity wins over speed here. Intended for small dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidQError, ValidationError
from .model import QuadraticProblem
from .polynomials import Q_ONE, QPolynomial

RANK_TOL_DEFAULT = 1e-12


def q_metric(problem: QuadraticProblem, x: np.ndarray, q: QPolynomial = Q_ONE) -> float:
    """<x - x_star, Q(H) (x - x_star)>."""
    e = np.asarray(x, dtype=float) - problem.x_star
    return float(e @ q.apply(problem.H, e))


def _check_q_positive(problem: QuadraticProblem, e0: np.ndarray, q: QPolynomial):
    """Reject Q that is nonpositive where the error actually lives."""
    comps = problem.eigvecs.T @ e0
    e0_norm = np.linalg.norm(e0)
    if e0_norm == 0.0:
        return
    active = np.abs(comps) > 1e-14 * e0_norm
    lam = problem.eigenvalues[active]
    qvals = np.atleast_1d(q(lam))
    zero_floor = 1e-14 * max(problem.L, 1.0)
    bad = (qvals < 0.0) | ((qvals <= 0.0) & (lam > zero_floor))
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise InvalidQError(
            f"Q({lam[idx]}) = {qvals[idx]} at an active eigenvalue; the weighted "
            f"metric is not positive there")


@dataclass(frozen=True)
class KrylovBasis:
    """Orthonormal basis (in the Q(H) inner product) of the reachable span.

    ``columns[:, :effective_rank]`` spans {H e0, H^2 e0, ..., H^(t+1) e0} up
    to the rank revealed by the drop tolerance; ``q_columns`` caches
    Q(H) applied to each column so weighted inner products are single dots.
    """

    columns: np.ndarray
    q_columns: np.ndarray
    effective_rank: int
    rank_tol: float


def build_krylov_basis(problem: QuadraticProblem, x0: np.ndarray, t: int,
                       q: QPolynomial = Q_ONE,
                       rank_tol: float = RANK_TOL_DEFAULT) -> KrylovBasis:
    """Weighted Gram-Schmidt basis of span{H e0, ..., H^(t+1) e0}.

    Each candidate is H times the previously orthonormalized column, which
    spans the same space as the raw powers while staying numerically
    rank-revealing. Candidates are reorthogonalized twice and dropped once
    their weighted norm falls below rank_tol times the largest weighted
    candidate norm seen, at which point the span has stopped growing.
    """
    if t < 0:
        raise ValidationError(f"order must be nonnegative, got {t}")
    x0 = np.asarray(x0, dtype=float)
    e0 = x0 - problem.x_star
    _check_q_positive(problem, e0, q)
    cols: list[np.ndarray] = []
    qcols: list[np.ndarray] = []
    max_norm = 0.0
    cand = problem.H @ e0
    for _ in range(t + 1):
        qcand = q.apply(problem.H, cand)
        raw_norm = np.sqrt(max(float(cand @ qcand), 0.0))
        max_norm = max(max_norm, raw_norm)
        for _pass in range(2):
            for u, qu in zip(cols, qcols):
                coef = float(qu @ cand)
                cand = cand - coef * u
                qcand = qcand - coef * qu
        norm = np.sqrt(max(float(cand @ qcand), 0.0))
        if max_norm == 0.0 or norm <= rank_tol * max_norm:
            break
        cols.append(cand / norm)
        qcols.append(qcand / norm)
        cand = problem.H @ cols[-1]
    d = problem.d
    columns = np.column_stack(cols) if cols else np.zeros((d, 0))
    q_columns = np.column_stack(qcols) if qcols else np.zeros((d, 0))
    return KrylovBasis(columns=columns, q_columns=q_columns,
                       effective_rank=len(cols), rank_tol=rank_tol)


def krylov_project(problem: QuadraticProblem, x0: np.ndarray, t: int,
                   q: QPolynomial = Q_ONE,
                   rank_tol: float = RANK_TOL_DEFAULT) -> np.ndarray:
    """Minimizer of <x - x_star, Q(H)(x - x_star)> over the order-t reachable set.

    The feasible set is x0 + span{H e0, ..., H^(t+1) e0}. Past the
    effective rank the projection lands on the full reachable space, which
    for nonsingular H is x_star itself.
    """
    basis = build_krylov_basis(problem, x0, t, q, rank_tol)
    x0 = np.asarray(x0, dtype=float)
    if basis.effective_rank == 0:
        return x0.copy()
    e0 = x0 - problem.x_star
    coefs = basis.q_columns.T @ e0
    return x0 - basis.columns @ coefs


@dataclass(frozen=True)
class OptimalityRecord:
    """Per-iteration gap between a trajectory and the projection oracle."""

    t: int
    deviation: float
    q_gap: float


def instance_optimality_report(problem: QuadraticProblem, x0: np.ndarray, T: int,
                               q: QPolynomial, trajectory) -> list[OptimalityRecord]:
    """Compare trajectory iterates against the oracle, iterate by iterate.

    ``deviation`` is ||x_t - oracle_t|| / ||x0 - x_star||; ``q_gap`` is the
    weighted-metric excess of the iterate over the oracle value, relative
    to the oracle value (floored at 1e-14 of the initial metric so fully
    converged tails do not divide by zero).
    """
    x0 = np.asarray(x0, dtype=float)
    e0_norm = float(np.linalg.norm(x0 - problem.x_star))
    if e0_norm == 0.0:
        return []
    metric0 = q_metric(problem, x0, q)
    records = []
    last = min(T, trajectory.n_records - 1)
    for t in range(1, last + 1):
        x_t = trajectory.iterates[t]
        proj = krylov_project(problem, x0, t - 1, q)
        metric_traj = q_metric(problem, x_t, q)
        metric_oracle = q_metric(problem, proj, q)
        floor = max(metric_oracle, 1e-14 * metric0)
        gap = (metric_traj - metric_oracle) / floor if floor > 0.0 else 0.0
        records.append(OptimalityRecord(
            t=t,
            deviation=float(np.linalg.norm(x_t - proj)) / e0_norm,
            q_gap=gap,
        ))
    return records
