"""Experiment harness: problem generation, method ensembles, CSV traces, checks.

The CSV contract: comment lines (``#``) carry the full experiment
configuration, then the exact header

    method,t,dist_sq,excess,grad_norm_sq,h_t,m_t,gamma_t,error

with one row per (method, iteration). Undefined adaptive fields are empty,
not zero. Output is byte-identical across repeated runs of the same
configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CGBreakdownError,
    DegenerateMomentumError,
    InvalidFStarError,
    ValidationError,
)
from .model import (
    QuadraticProblem,
    SpectrumSpec,
    initial_point,
    load_spectrum_file,
    make_problem,
)
from .oracle import instance_optimality_report, q_metric
from .polynomials import Q_ONE, parse_q
from .solvers import (
    GRAD_TOL_DEFAULT,
    AdaptiveHeavyBall,
    Chebyshev,
    GDConstant,
    GDPolyak,
    HBConstant,
    QMinHeavyBall,
    Trajectory,
    cg_classic,
    run,
)

CSV_HEADER = "method,t,dist_sq,excess,grad_norm_sq,h_t,m_t,gamma_t,error"

# Registration order fixes the expansion of --methods all and plot legends.
# Factories take the f_star value handed to the adaptive methods; methods
# that do not consume it ignore the argument.
METHOD_FACTORIES = {
    "gd-constant": lambda f_star: GDConstant(),
    "gd-polyak": lambda f_star: GDPolyak(1.0, f_star=f_star),
    "gd-polyak-2x": lambda f_star: GDPolyak(2.0, f_star=f_star),
    "hb-constant": lambda f_star: HBConstant(),
    "chebyshev": lambda f_star: Chebyshev(),
    "hb-polyak": lambda f_star: AdaptiveHeavyBall(f_star=f_star),
    "cg": None,  # handled specially, not a stepper
}

SOLVER_ERRORS = (DegenerateMomentumError, InvalidFStarError, CGBreakdownError)

VERIFY_DIM_CAP = 50


def known_method(name: str) -> bool:
    return name in METHOD_FACTORIES or name.startswith("qmin:")


def expand_methods(spec: str) -> tuple[str, ...]:
    """Parse a comma-separated method list; 'all' expands in registration order."""
    names = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "all":
            names.extend(n for n in METHOD_FACTORIES)
        else:
            names.append(token)
    for name in names:
        if not known_method(name):
            raise ValidationError(f"unknown method {name!r}; known: "
                                  f"{', '.join(METHOD_FACTORIES)}, qmin:<Q>")
    return tuple(names)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment byte for byte.

    ``fstar`` is the optimal value handed to the adaptive methods. The
    generated objective always has true minimum 0, so a nonzero value
    deliberately misinforms them (the wrong-optimum experiments).
    """

    dim: int = 25
    cond: float = 10.0
    spectrum: str = "geometric"
    seed: int = 0
    iters: int = 50
    methods: tuple[str, ...] = tuple(METHOD_FACTORIES)
    grad_tol: float = GRAD_TOL_DEFAULT
    fstar: float = 0.0
    x0_scale: float = 10.0

    def __post_init__(self):
        if self.cond < 1.0:
            raise ValidationError(f"condition number must be >= 1, got {self.cond}")
        if self.iters < 0:
            raise ValidationError(f"iteration count must be >= 0, got {self.iters}")
        if self.dim < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dim}")
        for name in self.methods:
            if not known_method(name):
                raise ValidationError(f"unknown method {name!r}")


def build_problem(config: ExperimentConfig) -> tuple[QuadraticProblem, np.ndarray]:
    """Problem plus default starting point for a config."""
    if config.spectrum.startswith("file:"):
        spec = load_spectrum_file(config.spectrum[len("file:"):], seed=config.seed)
    elif config.spectrum in ("geometric", "uniform"):
        spec = SpectrumSpec(kind=config.spectrum, d=config.dim,
                            mu=1.0, L=float(config.cond), seed=config.seed)
    else:
        raise ValidationError(
            f"unknown spectrum {config.spectrum!r}; use geometric, uniform or file:<path>")
    problem = make_problem(spec, x_star=None, f_star=0.0)
    x0 = initial_point(problem.d, config.seed, scale=config.x0_scale)
    return problem, x0


def run_method(name: str, problem: QuadraticProblem, x0: np.ndarray, T: int,
               grad_tol: float = GRAD_TOL_DEFAULT,
               f_star: float | None = None) -> Trajectory:
    """Run one registered method (or qmin:<Q>) and return its trajectory.

    ``f_star`` is forwarded to the methods that consume the optimal value;
    None means they read the problem's own.
    """
    if name == "cg":
        return cg_classic(problem, x0, T, grad_tol)
    if name.startswith("qmin:"):
        method = QMinHeavyBall(parse_q(name[len("qmin:"):]), name=name)
    elif name in METHOD_FACTORIES:
        method = METHOD_FACTORIES[name](f_star)
    else:
        raise ValidationError(f"unknown method {name!r}")
    return run(method, problem, x0, T, grad_tol)


def run_experiment(config: ExperimentConfig) -> tuple[list[Trajectory], list[str]]:
    """Run all configured methods; failed methods yield tagged partial traces.

    Returns the trajectories in method order plus the list of method names
    that hit a numerical degeneracy.
    """
    problem, x0 = build_problem(config)
    trajectories = []
    failed = []
    for name in config.methods:
        try:
            trajectories.append(
                run_method(name, problem, x0, config.iters, config.grad_tol,
                           f_star=config.fstar))
        except SOLVER_ERRORS as err:
            partial = getattr(err, "partial_trajectory", None)
            if partial is None:
                raise
            partial.method = name
            partial.error = f"{type(err).__name__}: {err}"
            partial.error_t = getattr(err, "iteration", -1)
            trajectories.append(partial)
            failed.append(name)
    return trajectories, failed


def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return ""
    return repr(float(value))


def render_csv(trajectories: list[Trajectory], config: ExperimentConfig) -> str:
    lines = [
        "# quadmin run",
        f"# dim = {config.dim}",
        f"# cond = {_fmt(config.cond)}",
        f"# spectrum = {config.spectrum}",
        f"# seed = {config.seed}",
        f"# iters = {config.iters}",
        f"# methods = {','.join(config.methods)}",
        f"# grad_tol = {_fmt(config.grad_tol)}",
        f"# fstar = {_fmt(config.fstar)}",
        f"# x0 = seeded gaussian (seed stream [{config.seed}, 2]) "
        f"scaled to norm {_fmt(config.x0_scale)}",
        CSV_HEADER,
    ]
    for traj in trajectories:
        last = traj.n_records - 1
        for i in range(traj.n_records):
            error = traj.error if (traj.error and i == last) else ""
            lines.append(",".join([
                traj.method,
                str(int(traj.t[i])),
                _fmt(traj.dist_sq[i]),
                _fmt(traj.excess[i]),
                _fmt(traj.grad_norm_sq[i]),
                _fmt(traj.h[i]),
                _fmt(traj.m[i]),
                _fmt(traj.gamma[i]),
                error,
            ]))
    return "\n".join(lines) + "\n"


def write_csv(trajectories: list[Trajectory], config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_csv(trajectories, config))


def plot_trajectories(trajectories: list[Trajectory], out_base: str) -> list[str]:
    """Semi-log convenience plots of the CSV contents; returns written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    panels = (("dist_sq", "squared distance to optimum"),
              ("excess", "function value gap"))
    for attr, label in panels:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for traj in trajectories:
            values = np.maximum(getattr(traj, attr), 1e-300)
            ax.semilogy(traj.t, values, label=traj.method)
        ax.set_xlabel("iteration")
        ax.set_ylabel(label)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = f"{out_base}_{attr.split('_')[0]}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# verify: end-to-end consistency checks against the projection oracle
# ---------------------------------------------------------------------------

VERIFY_TOLERANCES = {
    "projection_deviation": 1e-6,
    "q_metric_gap": 1e-8,
    "grad_orthogonality": 1e-8,
    "error_orthogonality": 1e-8,
    "monotonicity": 1e-10,
    "natural_step_identity": 1e-12,
    "instance_optimality": 1e-8,
}


def _check(report: dict, name: str, value: float, tol: float, detail: str = ""):
    entry = {"value": value, "tolerance": tol, "pass": bool(value <= tol)}
    if detail:
        entry["detail"] = detail
    report["checks"][name] = entry


def verify_experiment(config: ExperimentConfig) -> dict:
    """Run the reference methods and certify them against the oracle.

    Returns a JSON-friendly report; report["pass"] is the overall verdict.
    """
    if config.dim > VERIFY_DIM_CAP:
        raise ValidationError(
            f"verify is capped at dim <= {VERIFY_DIM_CAP} (oracle cost), got {config.dim}")
    problem, x0 = build_problem(config)
    T = config.iters
    e0_norm = float(np.linalg.norm(x0 - problem.x_star))
    report = {"config": {"dim": config.dim, "cond": config.cond,
                         "spectrum": config.spectrum, "seed": config.seed,
                         "iters": T},
              "checks": {}}

    alg1 = run_method("hb-polyak", problem, x0, T, config.grad_tol)
    qmin_one = run_method("qmin:1", problem, x0, T, config.grad_tol)
    qmin_x = run_method("qmin:x", problem, x0, T, config.grad_tol)
    qmin_x2 = run_method("qmin:x^2", problem, x0, T, config.grad_tol)
    cg = run_method("cg", problem, x0, T, config.grad_tol)

    # Deviation from the explicit projection, distance metric.
    for label, traj in (("hb-polyak", alg1), ("qmin:1", qmin_one)):
        recs = instance_optimality_report(problem, x0, T, Q_ONE, traj)
        dev = max((r.deviation for r in recs), default=0.0)
        _check(report, f"projection_deviation[{label}]", dev,
               VERIFY_TOLERANCES["projection_deviation"])

    # Metric gap against the oracle for each weighted metric.
    for label, qspec, traj in (("qmin:1", "1", qmin_one), ("qmin:x", "x", qmin_x),
                               ("qmin:x^2", "x^2", qmin_x2), ("cg", "x", cg)):
        recs = instance_optimality_report(problem, x0, T, parse_q(qspec), traj)
        gap = max((r.q_gap for r in recs), default=0.0)
        _check(report, f"q_metric_gap[{label}]", gap,
               VERIFY_TOLERANCES["q_metric_gap"])

    # Gradient orthogonality for the function-value metric (cg and qmin:x).
    d = problem.d
    for label, traj in (("qmin:x", qmin_x), ("cg", cg)):
        n_grads = min(d, traj.n_records - 1) + 1
        grads = [problem.grad(x) for x in traj.iterates[:n_grads]]
        g0_norm = np.linalg.norm(grads[0])
        worst = 0.0
        for s in range(len(grads)):
            for t in range(s + 1, len(grads)):
                denom = np.linalg.norm(grads[s]) * g0_norm
                if denom > 0:
                    worst = max(worst, abs(float(grads[s] @ grads[t])) / denom)
        _check(report, f"grad_orthogonality[{label}]", worst,
               VERIFY_TOLERANCES["grad_orthogonality"])

    # Error orthogonality for the distance metric: every later error is
    # orthogonal to every earlier gradient. Normalizing by the earlier
    # gradient keeps the ratio well posed after the method has converged
    # (late gradients are roundoff noise with arbitrary direction).
    worst = 0.0
    n = min(d, alg1.n_records - 1)
    for s in range(n):
        g_s = problem.grad(alg1.iterates[s])
        g_norm = np.linalg.norm(g_s)
        if g_norm == 0.0:
            continue
        for t in range(s + 1, n + 1):
            e_t = alg1.iterates[t] - problem.x_star
            worst = max(worst, abs(float(g_s @ e_t)) / (g_norm * e0_norm))
    _check(report, "error_orthogonality[hb-polyak]", worst,
           VERIFY_TOLERANCES["error_orthogonality"])

    # Distances never increase for the distance-metric minimizer.
    dist = np.sqrt(alg1.dist_sq)
    growth = 0.0
    for t in range(len(dist) - 1):
        if dist[t] > 0:
            growth = max(growth, dist[t + 1] / dist[t] - 1.0)
    _check(report, "monotonicity[hb-polyak]", growth,
           VERIFY_TOLERANCES["monotonicity"])

    # Natural step identity for the fixed accelerated tunings.
    base = 2.0 / (problem.L + problem.mu)
    worst = 0.0
    for name in ("chebyshev", "hb-constant"):
        traj = run_method(name, problem, x0, T, config.grad_tol)
        finite = traj.h[1:][np.isfinite(traj.h[1:])]
        if len(finite):
            worst = max(worst, float(np.max(np.abs(finite - base)) / base))
    _check(report, "natural_step_identity", worst,
           VERIFY_TOLERANCES["natural_step_identity"])

    # No competitor gets closer to x_star at any iteration.
    competitors = ("gd-constant", "gd-polyak", "gd-polyak-2x", "hb-constant",
                   "chebyshev")
    alg1_dist = np.sqrt(alg1.dist_sq)
    worst = -np.inf
    for name in competitors:
        other = np.sqrt(run_method(name, problem, x0, T, config.grad_tol).dist_sq)
        n = min(len(alg1_dist), len(other))
        margin = float(np.max((alg1_dist[:n] - other[:n]) / e0_norm))
        worst = max(worst, margin)
    _check(report, "instance_optimality[hb-polyak]", worst,
           VERIFY_TOLERANCES["instance_optimality"])

    report["pass"] = all(entry["pass"] for entry in report["checks"].values())
    return report
