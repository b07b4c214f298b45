"""Residual polynomials, discrete spectral measures and their recursions.

Every iterate of a gradient-span method satisfies
x_t - x_star = P_t(H) (x_0 - x_star) for some polynomial P_t with
P_t(0) = 1. Minimizing a weighted error metric over the reachable affine
subspace makes (P_t) an orthogonal family for a discrete measure supported
on the eigenvalues of H, generated by a three-term recursion. This module
materializes those objects so the fast solvers can be validated against
them.

Polynomials use the monomial basis, constant term first, with a hard
degree cap: coefficient growth makes the basis meaningless well before
degree 100. Validation should always compare polynomial *evaluations* at
measure atoms, never raw coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    InvalidTrajectoryError,
    MeasureExhaustedError,
    ValidationError,
)

MAX_DEGREE = 60


@dataclass(frozen=True)
class QPolynomial:
    """Metric weight polynomial, positive on the strictly positive reals.

    Coefficients are stored lowest degree first. The classic choices:
    (1,) weights plain squared distance, (0, 1) the function value gap,
    (0, 0, 1) the squared gradient norm.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ValidationError("Q polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def apply(self, H: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Q(H) v by Horner's rule, never forming Q(H)."""
        out = self.coeffs[-1] * v
        for c in reversed(self.coeffs[:-1]):
            out = H @ out + c * v
        return out

    def label(self) -> str:
        named = {(1.0,): "1", (0.0, 1.0): "x", (0.0, 0.0, 1.0): "x^2"}
        return named.get(self.coeffs, ",".join(repr(c) for c in self.coeffs))


Q_ONE = QPolynomial((1.0,))
Q_X = QPolynomial((0.0, 1.0))
Q_X2 = QPolynomial((0.0, 0.0, 1.0))


def parse_q(text: str) -> QPolynomial:
    """Parse '1', 'x', 'x^2'/'x2', or a comma list of coefficients (low first)."""
    cleaned = text.strip().lower()
    named = {"1": Q_ONE, "x": Q_X, "x^2": Q_X2, "x2": Q_X2, "x**2": Q_X2}
    if cleaned in named:
        return named[cleaned]
    try:
        coeffs = tuple(float(tok) for tok in cleaned.split(","))
    except ValueError as exc:
        raise ValidationError(f"cannot parse Q polynomial from {text!r}") from exc
    return QPolynomial(coeffs)


@dataclass(frozen=True)
class ResidualPolynomial:
    """Polynomial P with P(0) = 1, constant term first."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if coeffs[0] != 1.0:
            raise ValidationError(f"residual polynomial must have P(0)=1, got {coeffs[0]!r}")
        if len(coeffs) - 1 > MAX_DEGREE:
            raise ValidationError(
                f"degree {len(coeffs) - 1} exceeds monomial-basis cap {MAX_DEGREE}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)


P_ONE = ResidualPolynomial(np.array([1.0]))


@dataclass(frozen=True)
class SpectralMeasure:
    """Discrete measure with atoms at eigenvalues and nonnegative weights."""

    lambdas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if lam.shape != w.shape:
            raise ValidationError("atom and weight arrays differ in shape")
        if np.any(lam < 0.0):
            raise ValidationError("measure atoms must be nonnegative")
        if np.any(w < 0.0):
            raise ValidationError("measure weights must be nonnegative")
        lam.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", w)

    def xq(self) -> "SpectralMeasure":
        """The reweighted measure w -> lambda * w."""
        return SpectralMeasure(self.lambdas, self.lambdas * self.weights)

    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def support_size(self) -> int:
        """Number of distinct atoms carrying positive weight."""
        active = self.lambdas[self.weights > 0.0]
        return len(np.unique(active))


def measure_from_problem(problem, x0: np.ndarray, q: QPolynomial) -> SpectralMeasure:
    """Atoms Q(lambda_i) * <x0 - x_star, v_i>^2 over the full spectrum."""
    e0 = np.asarray(x0, dtype=float) - problem.x_star
    comps = problem.eigvecs.T @ e0
    return SpectralMeasure(problem.eigenvalues, q(problem.eigenvalues) * comps**2)


def inner_product(p: ResidualPolynomial, r: ResidualPolynomial,
                  measure: SpectralMeasure) -> float:
    """sum over atoms of w * p(lambda) * r(lambda)."""
    return float(np.sum(measure.weights * p(measure.lambdas) * r(measure.lambdas)))


def norm_sq(p: ResidualPolynomial, measure: SpectralMeasure) -> float:
    return float(np.sum(measure.weights * p(measure.lambdas) ** 2))


@dataclass(frozen=True)
class RecursionCoeffs:
    """Coefficients of one step P_{t+1} = ((a - X) P_t + b P_{t-1}) / c.

    ``c_tilde`` is stored exactly as a_tilde + b_tilde so evaluation at
    zero reproduces 1 bit for bit. ``b_ratio`` is the same quantity as
    ``b_tilde`` seen through iterate moments; keeping both makes the
    cross-parametrization checks explicit.
    """

    a_tilde: float
    b_tilde: float
    c_tilde: float
    b_ratio: float

    @property
    def step_gamma(self) -> float:
        """Coefficient on the gradient in the induced two-term update."""
        return 1.0 / self.c_tilde

    @property
    def momentum(self) -> float:
        return -self.b_tilde / self.c_tilde

    @property
    def step_natural(self) -> float:
        """Gradient coefficient with the momentum inflation divided out."""
        return self.step_gamma / (1.0 + self.momentum)


def make_recursion_coeffs(a_tilde: float, b_tilde: float) -> RecursionCoeffs:
    return RecursionCoeffs(a_tilde=float(a_tilde), b_tilde=float(b_tilde),
                           c_tilde=float(a_tilde) + float(b_tilde),
                           b_ratio=float(b_tilde))


def _norm_sq_with_exhaustion_check(poly: ResidualPolynomial,
                                   m_xq: SpectralMeasure) -> float:
    """Squared norm, raising once it is pure cancellation noise.

    A polynomial that annihilates the support evaluates to roundoff there,
    so its norm collapses relative to the cancellation-free magnitude
    sum_atoms w * (sum_k |c_k| lam^k)^2. The 1e-28 threshold is a couple of
    orders above squared machine epsilon.
    """
    lam, w = m_xq.lambdas, m_xq.weights
    value = float(np.sum(w * poly(lam) ** 2))
    magnitude = npoly.polyval(lam, np.abs(poly.coeffs))
    bound = float(np.sum(w * magnitude**2))
    if value <= 1e-28 * bound:
        raise MeasureExhaustedError(
            "polynomial annihilates the measure support; the orthogonal "
            "sequence ends here")
    return value


def recursion_coeffs(p_t: ResidualPolynomial, p_tm1: ResidualPolynomial | None,
                     m_xq: SpectralMeasure) -> RecursionCoeffs:
    """Orthogonalization coefficients against the given (already X-weighted) measure.

    Raises MeasureExhaustedError when a squared norm vanishes, which is the
    signal that the polynomial family has annihilated the measure support.
    """
    lam, w = m_xq.lambdas, m_xq.weights
    pt_vals = p_t(lam)
    den_t = _norm_sq_with_exhaustion_check(p_t, m_xq)
    a_tilde = float(np.sum(w * lam * pt_vals**2)) / den_t
    if p_tm1 is None:
        b_tilde = 0.0
    else:
        den_m = _norm_sq_with_exhaustion_check(p_tm1, m_xq)
        b_tilde = float(np.sum(w * lam * pt_vals * p_tm1(lam))) / den_m
    return make_recursion_coeffs(a_tilde, b_tilde)


def apply_recursion(p_t: ResidualPolynomial, p_tm1: ResidualPolynomial | None,
                    rc: RecursionCoeffs) -> ResidualPolynomial:
    """Next polynomial ((a - X) P_t + b P_{t-1}) / c; keeps P(0) = 1 exactly."""
    n = len(p_t.coeffs)
    out = np.zeros(n + 1)
    out[:n] = rc.a_tilde * p_t.coeffs
    out[1:n + 1] -= p_t.coeffs
    if p_tm1 is not None and rc.b_tilde != 0.0:
        out[:len(p_tm1.coeffs)] += rc.b_tilde * p_tm1.coeffs
    out /= rc.c_tilde
    return ResidualPolynomial(out)


def orthogonal_sequence(m_xq: SpectralMeasure, count: int) -> list[ResidualPolynomial]:
    """P_0 .. P_count generated by the recursion; stops early when exhausted."""
    polys = [P_ONE]
    for t in range(count):
        prev = polys[t - 1] if t >= 1 else None
        try:
            rc = recursion_coeffs(polys[t], prev, m_xq)
        except MeasureExhaustedError:
            break
        polys.append(apply_recursion(polys[t], prev, rc))
    return polys


def polys_from_trajectory(traj) -> list[ResidualPolynomial]:
    """Rebuild residual polynomials from a two-term method's recorded steps.

    Row t of a trajectory holds the (gamma, m) pair of the step that
    produced x_t, so rows 1..n drive the recursion. The virtual previous
    polynomial at the first step is P_0 itself, matching the x_{-1} = x_0
    start convention.
    """
    gammas = np.asarray(traj.gamma, dtype=float)
    ms = np.asarray(traj.m, dtype=float)
    polys = [P_ONE]
    for k in range(1, len(gammas)):
        gamma, m = gammas[k], ms[k]
        if not np.isfinite(gamma) or not np.isfinite(m):
            raise InvalidTrajectoryError(
                f"row {k} has no step parameters (not a two-term method trajectory?)")
        if gamma == 0.0:
            raise InvalidTrajectoryError(f"row {k} has zero step size")
        b_tilde = -m / gamma
        a_tilde = 1.0 / gamma - b_tilde
        rc = make_recursion_coeffs(a_tilde, b_tilde)
        prev = polys[k - 2] if k >= 2 else polys[0]
        polys.append(apply_recursion(polys[k - 1], prev, rc))
    return polys


def min_norm_direct(measure: SpectralMeasure, t: int) -> tuple[float, ResidualPolynomial]:
    """Directly minimize the measure-weighted norm over {P : deg <= t, P(0) = 1}.

    Small dense least squares on the atom evaluation matrix with the affine
    constraint eliminated. Deliberately independent of the three-term
    recursion so it can serve as its oracle; intended for small t only.
    """
    if t < 0:
        raise ValidationError("degree bound must be nonnegative")
    if t > MAX_DEGREE:
        raise ValidationError(f"degree {t} exceeds cap {MAX_DEGREE}")
    lam, w = measure.lambdas, measure.weights
    if t == 0:
        return measure.total(), P_ONE
    powers = lam[:, None] ** np.arange(1, t + 1)
    root_w = np.sqrt(w)
    coeffs_tail, *_ = np.linalg.lstsq(root_w[:, None] * powers, -root_w, rcond=None)
    poly = ResidualPolynomial(np.concatenate(([1.0], coeffs_tail)))
    return norm_sq(poly, measure), poly
