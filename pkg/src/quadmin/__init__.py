"""First-order solvers for convex quadratic minimization.

Builds quadratic test problems with exact spectra, runs a family of
two-term (heavy-ball form) methods including an adaptive tuning that only
needs the optimal value, and certifies them against a brute-force Krylov
projection oracle and against orthogonal-polynomial theory.
"""

from .errors import (
    CGBreakdownError,
    DegenerateMomentumError,
    InvalidFStarError,
    InvalidQError,
    InvalidTrajectoryError,
    MeasureExhaustedError,
    ValidationError,
)
from .model import (
    QuadraticProblem,
    SpectrumSpec,
    initial_point,
    load_spectrum_file,
    make_problem,
    problem_from_matrix,
    random_orthogonal,
)
from .oracle import (
    KrylovBasis,
    OptimalityRecord,
    build_krylov_basis,
    instance_optimality_report,
    krylov_project,
    q_metric,
)
from .polynomials import (
    Q_ONE,
    Q_X,
    Q_X2,
    QPolynomial,
    RecursionCoeffs,
    ResidualPolynomial,
    SpectralMeasure,
    apply_recursion,
    inner_product,
    make_recursion_coeffs,
    measure_from_problem,
    min_norm_direct,
    norm_sq,
    orthogonal_sequence,
    parse_q,
    polys_from_trajectory,
    recursion_coeffs,
)
from .solvers import (
    GRAD_TOL_DEFAULT,
    AdaptiveHeavyBall,
    Chebyshev,
    GDConstant,
    GDPolyak,
    HBConstant,
    QMinHeavyBall,
    SolverState,
    Trajectory,
    cg_classic,
    init_state,
    polyak_step_size,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveHeavyBall",
    "CGBreakdownError",
    "Chebyshev",
    "DegenerateMomentumError",
    "GDConstant",
    "GDPolyak",
    "GRAD_TOL_DEFAULT",
    "HBConstant",
    "InvalidFStarError",
    "InvalidQError",
    "InvalidTrajectoryError",
    "KrylovBasis",
    "MeasureExhaustedError",
    "OptimalityRecord",
    "Q_ONE",
    "Q_X",
    "Q_X2",
    "QMinHeavyBall",
    "QPolynomial",
    "QuadraticProblem",
    "RecursionCoeffs",
    "ResidualPolynomial",
    "SolverState",
    "SpectralMeasure",
    "SpectrumSpec",
    "Trajectory",
    "ValidationError",
    "apply_recursion",
    "build_krylov_basis",
    "cg_classic",
    "init_state",
    "initial_point",
    "inner_product",
    "instance_optimality_report",
    "krylov_project",
    "load_spectrum_file",
    "make_problem",
    "make_recursion_coeffs",
    "measure_from_problem",
    "min_norm_direct",
    "norm_sq",
    "orthogonal_sequence",
    "parse_q",
    "polyak_step_size",
    "polys_from_trajectory",
    "problem_from_matrix",
    "q_metric",
    "random_orthogonal",
    "recursion_coeffs",
    "run",
]
