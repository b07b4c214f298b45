import numpy as np
import pytest

from quadmin import SpectrumSpec, initial_point, make_problem, problem_from_matrix


@pytest.fixture
def diag13():
    """H = diag(1, 3), minimizer at the origin, optimal value 0."""
    return problem_from_matrix(np.diag([1.0, 3.0]))


@pytest.fixture
def identity2():
    return problem_from_matrix(np.eye(2))


def geometric_problem(d, kappa, seed):
    spec = SpectrumSpec("geometric", d, 1.0, float(kappa), seed=seed)
    return make_problem(spec), initial_point(d, seed)
