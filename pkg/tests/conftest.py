import numpy as np
import pytest

from capdisc.discrepancy import local_discrepancy
from capdisc.pointset import PointSet, enumerate_index_sets, sample_uniform_sphere


def brute_force_discrepancy(X, min_size):
    """Reference maximum by the plain scalar loop, first tie wins."""
    best = None
    for I in enumerate_index_sets(X.N, X.d, min_size):
        for s in (1, 2):
            ld = local_discrepancy(X, I, s)
            if best is None or ld.value > best.value:
                best = ld
    return best


def random_generic(d, N, seed):
    """Seeded on-sphere sample; uniform draws are generic in practice."""
    return sample_uniform_sphere(d, N, seed)


def perturbed(X, rng, radius):
    """Random perturbation of Frobenius norm exactly radius (off-sphere)."""
    D = rng.standard_normal(X.X.shape)
    D *= radius / np.linalg.norm(D)
    return PointSet(X.X + D)


@pytest.fixture(scope="session")
def two_points():
    """The orthogonal pair (e1, e2) in R^3 used by the worked examples."""
    X = np.zeros((3, 2))
    X[0, 0] = 1.0
    X[1, 1] = 1.0
    return PointSet(X)


@pytest.fixture(scope="session")
def tetrahedron():
    """Regular simplex on S^2; highly symmetric, every triple ties."""
    V = np.array([[1.0, 1.0, 1.0],
                  [1.0, -1.0, -1.0],
                  [-1.0, 1.0, -1.0],
                  [-1.0, -1.0, 1.0]]).T
    return PointSet(V / np.sqrt(3.0))
