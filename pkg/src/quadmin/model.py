"""Convex quadratic test problems with controlled spectra.

A problem is f(x) = 0.5 * <x - x_star, H (x - x_star)> + f_star with H
symmetric positive semi-definite. Instances are built from an eigenvalue
profile plus a seeded random orthogonal similarity transform, so the
spectrum (and hence the condition number) is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

SPECTRUM_KINDS = ("geometric", "uniform", "explicit")

# Eigenvalues below ZERO_EIG_REL * L count as the zero class when deriving mu.
ZERO_EIG_REL = 1e-12


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random orthogonal matrix.

    QR-factorizes a standard Gaussian matrix and flips column signs so the
    triangular factor has a positive diagonal; without the sign fix the
    distribution is not uniform over the orthogonal group.
    """
    if d < 1:
        raise ValidationError(f"dimension must be positive, got {d}")
    gauss = rng.standard_normal((d, d))
    q, r = np.linalg.qr(gauss)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs


@dataclass(frozen=True)
class SpectrumSpec:
    """Eigenvalue profile for a generated Hessian.

    kind "geometric": lambda_i = mu * (L/mu)**(i/(d-1)), endpoints exact.
    kind "uniform": evenly spaced between mu and L.
    kind "explicit": user-supplied nonnegative values.
    """

    kind: str
    d: int
    mu: float = 1.0
    L: float = 1.0
    values: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise ValidationError(
                f"unknown spectrum kind {self.kind!r}, expected one of {SPECTRUM_KINDS}")
        if self.d < 1:
            raise ValidationError(f"dimension must be at least 1, got {self.d}")
        if self.kind == "explicit":
            if self.values is None:
                raise ValidationError("explicit spectrum requires values")
            vals = np.asarray(self.values, dtype=float)
            if vals.ndim != 1 or len(vals) != self.d:
                raise ValidationError(
                    f"explicit spectrum needs {self.d} values, got shape {vals.shape}")
            if np.any(vals < 0.0):
                raise ValidationError("explicit eigenvalues must be nonnegative")
        else:
            if not self.mu > 0.0:
                raise ValidationError(f"mu must be positive, got {self.mu}")
            if self.L < self.mu:
                raise ValidationError(f"need L >= mu, got L={self.L} < mu={self.mu}")
            if self.d == 1 and self.L != self.mu:
                raise ValidationError("d=1 spectrum requires L == mu")

    @classmethod
    def explicit(cls, values, seed: int = 0) -> "SpectrumSpec":
        vals = tuple(float(v) for v in np.atleast_1d(values))
        lo = min((v for v in vals if v > 0.0), default=0.0)
        return cls(kind="explicit", d=len(vals), mu=lo, L=max(vals, default=0.0),
                   values=vals, seed=seed)

    def eigenvalues(self) -> np.ndarray:
        """Sorted (ascending) eigenvalue array realizing this spec."""
        if self.kind == "explicit":
            return np.sort(np.asarray(self.values, dtype=float))
        if self.d == 1:
            return np.array([self.mu])
        if self.kind == "uniform":
            return np.linspace(self.mu, self.L, self.d)
        exponents = np.arange(self.d) / (self.d - 1)
        lam = self.mu * (self.L / self.mu) ** exponents
        lam[0] = self.mu
        lam[-1] = self.L
        return lam


@dataclass(frozen=True)
class QuadraticProblem:
    """Immutable quadratic instance; safe to share across concurrent runs.

    ``eigenvalues`` is ascending and paired column-for-column with
    ``eigvecs``. ``mu`` is the smallest eigenvalue outside the numerical
    zero class, ``L`` the largest.
    """

    H: np.ndarray
    x_star: np.ndarray
    f_star: float
    eigenvalues: np.ndarray
    eigvecs: np.ndarray
    mu: float
    L: float

    def __post_init__(self):
        H = self.H
        asym = np.linalg.norm(H - H.T)
        scale = np.linalg.norm(H)
        if scale > 0 and asym > 1e-12 * scale:
            raise ValidationError(f"H not symmetric: rel asymmetry {asym / scale:.2e}")
        if np.any(self.eigenvalues < 0.0):
            raise ValidationError("stored eigenvalues must be nonnegative")
        if self.mu > self.L:
            raise ValidationError(f"mu={self.mu} exceeds L={self.L}")
        if len(self.x_star) != H.shape[0]:
            raise ValidationError("x_star dimension does not match H")
        for arr in (self.H, self.x_star, self.eigenvalues, self.eigvecs):
            arr.setflags(write=False)

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @property
    def kappa(self) -> float:
        return self.L / self.mu if self.mu > 0 else float("inf")

    @property
    def linear_term(self) -> np.ndarray:
        """Linear coefficient of the expanded form, -H x_star. Read-only view."""
        h = -self.H @ self.x_star
        h.setflags(write=False)
        return h

    def _check_dim(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValidationError(f"expected vector of shape ({self.d},), got {x.shape}")
        return x

    def f(self, x: np.ndarray) -> float:
        e = self._check_dim(x) - self.x_star
        return 0.5 * float(e @ (self.H @ e)) + self.f_star

    def grad(self, x: np.ndarray) -> np.ndarray:
        e = self._check_dim(x) - self.x_star
        return self.H @ e

    def f_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Value and gradient with a single matrix-vector product."""
        e = self._check_dim(x) - self.x_star
        g = self.H @ e
        return 0.5 * float(e @ g) + self.f_star, g

    def excess(self, x: np.ndarray) -> float:
        """f(x) - f_star evaluated without cancellation against f_star."""
        e = self._check_dim(x) - self.x_star
        return 0.5 * float(e @ (self.H @ e))


def _resolve_x_star(x_star, d: int, seed: int) -> np.ndarray:
    if x_star is None:
        return np.zeros(d)
    if isinstance(x_star, str):
        if x_star != "random":
            raise ValidationError(f"x_star must be a vector, None or 'random', got {x_star!r}")
        return np.random.default_rng([seed, 1]).standard_normal(d)
    x_star = np.asarray(x_star, dtype=float)
    if x_star.shape != (d,):
        raise ValidationError(f"x_star has shape {x_star.shape}, expected ({d},)")
    return x_star.copy()


def make_problem(spec: SpectrumSpec, x_star=None, f_star: float = 0.0) -> QuadraticProblem:
    """Build H = V diag(lambda) V^T with V Haar-random, deterministic per seed."""
    lam = spec.eigenvalues()
    d = spec.d
    v = random_orthogonal(d, np.random.default_rng([spec.seed, 0]))
    H = (v * lam) @ v.T
    H = 0.5 * (H + H.T)
    top = float(lam[-1])
    positive = lam[lam > ZERO_EIG_REL * top] if top > 0 else lam[lam > 0]
    mu = float(positive[0]) if len(positive) else 0.0
    return QuadraticProblem(
        H=H,
        x_star=_resolve_x_star(x_star, d, spec.seed),
        f_star=float(f_star),
        eigenvalues=lam,
        eigvecs=v,
        mu=mu,
        L=top,
    )


def problem_from_matrix(H, x_star=None, f_star: float = 0.0,
                        seed: int = 0) -> QuadraticProblem:
    """Wrap an existing symmetric PSD matrix, eigendecomposing it."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"H must be square, got shape {H.shape}")
    H = 0.5 * (H + H.T)
    lam, v = np.linalg.eigh(H)
    top = float(lam[-1]) if len(lam) else 0.0
    if top > 0 and lam[0] < -1e-10 * top:
        raise ValidationError(f"H has a negative eigenvalue: {lam[0]:.3e}")
    lam = np.clip(lam, 0.0, None)
    positive = lam[lam > ZERO_EIG_REL * top] if top > 0 else lam[lam > 0]
    mu = float(positive[0]) if len(positive) else 0.0
    return QuadraticProblem(
        H=H,
        x_star=_resolve_x_star(x_star, H.shape[0], seed),
        f_star=float(f_star),
        eigenvalues=lam,
        eigvecs=v,
        mu=mu,
        L=top,
    )


def load_spectrum_file(path, seed: int = 0) -> SpectrumSpec:
    """Parse a plain-text spectrum: one nonnegative value per line, '#' comments."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            value = float(line)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: not a number: {line!r}") from exc
        if value < 0.0:
            raise ValidationError(f"{path}:{lineno}: negative eigenvalue {value}")
        values.append(value)
    if not values:
        raise ValidationError(f"{path}: no eigenvalues found")
    return SpectrumSpec.explicit(values, seed=seed)


def initial_point(d: int, seed: int, scale: float = 10.0) -> np.ndarray:
    """Default starting point: seeded Gaussian direction scaled to given norm."""
    v = np.random.default_rng([seed, 2]).standard_normal(d)
    return v * (scale / np.linalg.norm(v))
