"""Iterative methods for quadratic minimization behind one stepping interface.

Methods fall in two families. Two-term updates

    x_{t+1} = x_t - (1 + m_t) * h_t * grad f(x_t) + m_t (x_t - x_{t-1})

cover plain gradient descent (m_t = 0), the fixed and iteration-indexed
accelerated tunings, the adaptive variant driven by the known optimal
value, and the moment-ratio reference method that minimizes an arbitrary
polynomial-weighted error metric. Classical conjugate gradient is kept in
its textbook form for cross-validation.

The ``h_t`` above is the "natural" step size: the gradient coefficient
with the momentum inflation divided out. The effective coefficient is
gamma_t = (1 + m_t) * h_t, and for the fixed accelerated tunings h_t is
the constant 2 / (L + mu). Both are recorded.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CGBreakdownError,
    DegenerateMomentumError,
    InvalidFStarError,
    ValidationError,
)
from .model import QuadraticProblem
from .polynomials import QPolynomial

GRAD_TOL_DEFAULT = 1e-13  # relative to the initial gradient norm
DENOM_TOL = 1e-14         # momentum denominator guard, relative to its positive term

_NAN = float("nan")


@dataclass(frozen=True)
class SolverState:
    """One method's per-iteration state.

    ``h_curr``, ``m_curr`` and ``gamma_curr`` are the parameters of the step
    that produced ``x_curr``; they are NaN at t=0 where no step has been
    taken, and always satisfy gamma = (1 + m) * h when defined. ``m_next``
    carries the momentum prepared for the upcoming step (0 at t=0 for the
    whole two-term family). ``grad_tol`` is the absolute threshold below
    which the state counts as converged and freezes.
    """

    t: int
    x_curr: np.ndarray
    x_prev: np.ndarray
    f_curr: float
    grad_curr: np.ndarray
    converged: bool
    grad_tol: float
    h_curr: float = _NAN
    m_curr: float = _NAN
    gamma_curr: float = _NAN
    m_next: float = 0.0


def init_state(problem: QuadraticProblem, x0: np.ndarray,
               grad_tol: float = GRAD_TOL_DEFAULT) -> SolverState:
    """Initial state at x0; the stopping threshold is grad_tol * ||grad f(x0)||."""
    x0 = np.asarray(x0, dtype=float).copy()
    f0, g0 = problem.f_and_grad(x0)
    tol_abs = float(grad_tol) * float(np.linalg.norm(g0))
    return SolverState(
        t=0, x_curr=x0, x_prev=x0.copy(), f_curr=f0, grad_curr=g0,
        converged=bool(np.linalg.norm(g0) <= tol_abs), grad_tol=tol_abs,
    )


def _check_live(state: SolverState):
    if state.converged:
        raise ValidationError("stepping a converged state; it is frozen")


def _advance(state: SolverState, problem: QuadraticProblem, x_new: np.ndarray,
             h: float, m: float, gamma: float, m_next: float) -> SolverState:
    f_new, g_new = problem.f_and_grad(x_new)
    return SolverState(
        t=state.t + 1, x_curr=x_new, x_prev=state.x_curr,
        f_curr=f_new, grad_curr=g_new,
        converged=bool(np.linalg.norm(g_new) <= state.grad_tol),
        grad_tol=state.grad_tol,
        h_curr=h, m_curr=m, gamma_curr=gamma, m_next=m_next,
    )


def polyak_step_size(f_val: float, f_star: float, grad: np.ndarray,
                     factor: float = 1.0) -> float:
    """factor * (f(x) - f_star) / ||grad f(x)||^2.

    factor=1 is the classical choice; factor=2 projects the error onto the
    gradient's orthogonal complement on quadratics.
    """
    gsq = float(np.asarray(grad) @ np.asarray(grad))
    if gsq == 0.0:
        raise ValidationError("zero gradient: the point is already optimal")
    if f_val < f_star:
        raise InvalidFStarError(
            f"observed value {f_val} is below the claimed optimum {f_star}")
    return factor * (f_val - f_star) / gsq


class GDConstant:
    """Fixed-step gradient descent; default step 2 / (L + mu)."""

    name = "gd-constant"

    def __init__(self, gamma: float | None = None):
        self.gamma = gamma

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        gamma = self.gamma if self.gamma is not None else 2.0 / (problem.L + problem.mu)
        x_new = state.x_curr - gamma * state.grad_curr
        return _advance(state, problem, x_new, h=gamma, m=0.0, gamma=gamma, m_next=0.0)


class GDPolyak:
    """Gradient descent with the adaptive step driven by the known optimum.

    ``f_star`` overrides the problem's own optimal value; this is how a
    user-supplied (possibly wrong) optimum enters. A claimed optimum above
    the true minimum is detected and reported as soon as an observed value
    drops below it.
    """

    def __init__(self, factor: float = 1.0, f_star: float | None = None):
        self.factor = factor
        self.f_star = f_star
        self.name = "gd-polyak" if factor == 1.0 else "gd-polyak-2x"

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        f_star = problem.f_star if self.f_star is None else self.f_star
        gamma = polyak_step_size(state.f_curr, f_star, state.grad_curr, self.factor)
        x_new = state.x_curr - gamma * state.grad_curr
        return _advance(state, problem, x_new, h=gamma, m=0.0, gamma=gamma, m_next=0.0)


class HBConstant:
    """Heavy-ball with the stationary accelerated tuning.

    Defaults: gamma = (2 / (sqrt(L) + sqrt(mu)))^2 and
    m = ((sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)))^2. The first step is a
    pure gradient step through the x_{-1} = x_0 convention.
    """

    name = "hb-constant"

    def __init__(self, gamma: float | None = None, m: float | None = None):
        self.gamma = gamma
        self.m = m

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        sl, sm = math.sqrt(problem.L), math.sqrt(problem.mu)
        gamma = self.gamma if self.gamma is not None else (2.0 / (sl + sm)) ** 2
        m = self.m if self.m is not None else ((sl - sm) / (sl + sm)) ** 2
        x_new = (state.x_curr - gamma * state.grad_curr
                 + m * (state.x_curr - state.x_prev))
        return _advance(state, problem, x_new,
                        h=gamma / (1.0 + m), m=m, gamma=gamma, m_next=m)


class Chebyshev:
    """Iteration-indexed accelerated tuning, worst-case optimal on [mu, L].

    m_t = rho^2 * (1 + rho^(2(t-1))) / (1 + rho^(2(t+1))) with
    rho = (sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)) and
    gamma_t = (2 / (L + mu)) * (1 + m_t). The t=0 update is a plain gradient
    step with gamma = 2 / (L + mu), so the natural step is that constant at
    every iteration.
    """

    name = "chebyshev"

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        base = 2.0 / (problem.L + problem.mu)
        t = state.t
        if t == 0:
            m = 0.0
        else:
            sl, sm = math.sqrt(problem.L), math.sqrt(problem.mu)
            rho = (sl - sm) / (sl + sm)
            m = rho**2 * (1.0 + rho ** (2 * (t - 1))) / (1.0 + rho ** (2 * (t + 1)))
        gamma = base * (1.0 + m)
        x_new = (state.x_curr - gamma * state.grad_curr
                 + m * (state.x_curr - state.x_prev))
        return _advance(state, problem, x_new, h=base, m=m, gamma=gamma, m_next=m)


class AdaptiveHeavyBall:
    """Heavy-ball whose step and momentum come from f values and gradients only.

    Uses the known optimal value f_star instead of any spectral information:

        h_t = 2 (f(x_t) - f_star) / ||grad f(x_t)||^2
        m_{t+1} = -(f(x_{t+1}) - f_star) <g_{t+1}, g_t>
                  / [(f(x_t) - f_star) ||g_{t+1}||^2
                     + (f(x_{t+1}) - f_star) <g_{t+1}, g_t>]

    with m_0 = 0. On quadratics the iterates coincide with the Euclidean
    projection of x_star onto the affine span of the observed gradients,
    so the method converges in at most d steps in exact arithmetic and no
    gradient-span method can be closer to x_star at any iteration.

    ``f_star`` overrides the problem's optimal value (how a user-supplied,
    possibly wrong, optimum enters).
    """

    name = "hb-polyak"

    def __init__(self, f_star: float | None = None):
        self.f_star = f_star

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        f_star = problem.f_star if self.f_star is None else self.f_star
        excess = state.f_curr - f_star
        if excess < 0.0:
            raise InvalidFStarError(
                f"f(x_{state.t}) = {state.f_curr} is below the claimed optimum "
                f"{f_star}")
        gsq = float(state.grad_curr @ state.grad_curr)
        h = 2.0 * excess / gsq
        m = state.m_next
        x_new = (state.x_curr - (1.0 + m) * h * state.grad_curr
                 + m * (state.x_curr - state.x_prev))
        new = _advance(state, problem, x_new,
                       h=h, m=m, gamma=(1.0 + m) * h, m_next=0.0)
        if new.converged:
            return new
        excess_new = new.f_curr - f_star
        if excess_new < 0.0:
            raise InvalidFStarError(
                f"f(x_{new.t}) = {new.f_curr} is below the claimed optimum "
                f"{f_star}")
        cross = float(new.grad_curr @ state.grad_curr)
        positive = excess * float(new.grad_curr @ new.grad_curr)
        denom = positive + excess_new * cross
        if abs(denom) <= DENOM_TOL * positive:
            raise DegenerateMomentumError(
                f"momentum denominator {denom:.3e} vanished against scale "
                f"{positive:.3e} at t={state.t}",
                t=state.t, denominator=denom, scale=positive)
        return replace(new, m_next=-excess_new * cross / denom)


class QMinHeavyBall:
    """Reference two-term method minimizing an arbitrary Q(H)-weighted metric.

    Unlike the adaptive variant this reads H and x_star directly: with
    e_t = x_t - x_star,

        h_t = <e_t, H Q(H) e_t> / <e_t, H^2 Q(H) e_t>
        b_t = <e_t, H^2 Q(H) e_{t-1}> / <e_{t-1}, H Q(H) e_{t-1}>   (b_0 = 0)
        m_t = -b_t h_t / (1 + b_t h_t)

    It is an analysis and testing tool, not a practical solver. Q=(1,)
    reproduces the adaptive heavy-ball; Q=(0,1) reproduces conjugate
    gradient. Matrix polynomials are applied through repeated
    matrix-vector products.
    """

    def __init__(self, q: QPolynomial, name: str | None = None):
        self.q = q
        self.name = name if name is not None else f"qmin:{q.label()}"

    def _moments(self, problem, e):
        """(H Q e, <e, H Q e>, <e, H^2 Q e>, H^2 Q e) for one error vector."""
        u = self.q.apply(problem.H, e)
        hu = problem.H @ u
        hhu = problem.H @ hu
        return hu, float(e @ hu), float(e @ hhu), hhu

    def step(self, state: SolverState, problem: QuadraticProblem) -> SolverState:
        _check_live(state)
        e = state.x_curr - problem.x_star
        _, m1, m2, hhu = self._moments(problem, e)
        if m2 <= 0.0 or m1 <= 0.0:
            # The error sits where the weighted metric cannot see it.
            return replace(state, converged=True)
        h = m1 / m2
        if state.t == 0:
            b = 0.0
        else:
            e_prev = state.x_prev - problem.x_star
            _, m1_prev, _, _ = self._moments(problem, e_prev)
            b = float(hhu @ e_prev) / m1_prev if m1_prev > 0.0 else 0.0
        denom = 1.0 + b * h
        if abs(denom) <= DENOM_TOL * max(1.0, abs(b * h)):
            raise DegenerateMomentumError(
                f"1 + b*h = {denom:.3e} vanished at t={state.t}",
                t=state.t, denominator=denom, scale=max(1.0, abs(b * h)))
        m = -b * h / denom
        x_new = (state.x_curr - (1.0 + m) * h * state.grad_curr
                 + m * (state.x_curr - state.x_prev))
        return _advance(state, problem, x_new,
                        h=h, m=m, gamma=(1.0 + m) * h, m_next=_NAN)


@dataclass
class Trajectory:
    """Per-iteration records of one method run.

    Row t holds the metrics of x_t together with the (h, m, gamma) of the
    step that produced x_t; row 0 carries NaN step parameters. ``iterates``
    stacks x_0..x_n row-wise so reference projections can be compared
    iterate by iterate.
    """

    method: str
    t: np.ndarray
    dist_sq: np.ndarray
    excess: np.ndarray
    grad_norm_sq: np.ndarray
    h: np.ndarray
    m: np.ndarray
    gamma: np.ndarray
    iterates: np.ndarray
    converged: bool
    wall_time: float
    error: str = ""
    error_t: int = -1

    @property
    def n_records(self) -> int:
        return len(self.t)


class _Recorder:
    def __init__(self, problem: QuadraticProblem, method_name: str):
        self.problem = problem
        self.method = method_name
        self.rows = []
        self.iterates = []

    def add(self, state: SolverState):
        e = state.x_curr - self.problem.x_star
        g = state.grad_curr
        self.rows.append((
            state.t, float(e @ e), state.f_curr - self.problem.f_star,
            float(g @ g), state.h_curr, state.m_curr, state.gamma_curr,
        ))
        self.iterates.append(state.x_curr.copy())

    def finish(self, converged: bool, wall_time: float) -> Trajectory:
        cols = list(zip(*self.rows))
        return Trajectory(
            method=self.method,
            t=np.array(cols[0], dtype=int),
            dist_sq=np.array(cols[1]),
            excess=np.array(cols[2]),
            grad_norm_sq=np.array(cols[3]),
            h=np.array(cols[4]),
            m=np.array(cols[5]),
            gamma=np.array(cols[6]),
            iterates=np.vstack(self.iterates),
            converged=converged,
            wall_time=wall_time,
        )


def run(method, problem: QuadraticProblem, x0: np.ndarray, T: int,
        grad_tol: float = GRAD_TOL_DEFAULT) -> Trajectory:
    """Apply ``method.step`` up to T times or until the gradient test fires.

    Deterministic for fixed inputs. Step errors are re-raised with the
    failing iteration index and the partial trajectory attached.
    """
    if T < 0:
        raise ValidationError(f"iteration budget must be nonnegative, got {T}")
    start = time.perf_counter()
    state = init_state(problem, x0, grad_tol)
    recorder = _Recorder(problem, method.name)
    recorder.add(state)
    for t in range(T):
        if state.converged:
            break
        try:
            state = method.step(state, problem)
        except Exception as err:
            err.iteration = t
            err.partial_trajectory = recorder.finish(
                converged=False, wall_time=time.perf_counter() - start)
            raise
        recorder.add(state)
    return recorder.finish(converged=state.converged,
                           wall_time=time.perf_counter() - start)


def cg_classic(problem: QuadraticProblem, x0: np.ndarray, T: int,
               grad_tol: float = GRAD_TOL_DEFAULT) -> Trajectory:
    """Textbook conjugate gradient on the quadratic, for cross-validation.

    Consumes only gradients and matrix-vector products against its own
    search directions; neither x_star nor f_star enters the iteration.
    Step parameter columns are left NaN since the update is not in
    two-term gradient form.
    """
    if T < 0:
        raise ValidationError(f"iteration budget must be nonnegative, got {T}")
    start = time.perf_counter()
    state = init_state(problem, x0, grad_tol)
    recorder = _Recorder(problem, "cg")
    recorder.add(state)
    x = state.x_curr
    r = -state.grad_curr
    direction = r.copy()
    rs = float(r @ r)
    converged = state.converged
    for t in range(T):
        if converged:
            break
        h_dir = problem.H @ direction
        curvature = float(direction @ h_dir)
        if curvature <= 0.0:
            err = CGBreakdownError(
                f"direction curvature {curvature:.3e} at t={t}")
            err.iteration = t
            err.partial_trajectory = recorder.finish(
                converged=False, wall_time=time.perf_counter() - start)
            raise err
        alpha = rs / curvature
        x = x + alpha * direction
        r = r - alpha * h_dir
        rs_new = float(r @ r)
        f_new, g_new = problem.f_and_grad(x)
        converged = bool(np.linalg.norm(g_new) <= state.grad_tol)
        recorder.add(SolverState(
            t=t + 1, x_curr=x, x_prev=x, f_curr=f_new, grad_curr=g_new,
            converged=converged, grad_tol=state.grad_tol,
        ))
        direction = r + (rs_new / rs) * direction
        rs = rs_new
    return recorder.finish(converged=converged,
                           wall_time=time.perf_counter() - start)
