import numpy as np
import pytest

from ssldyn import DataMoments, ModelState


def realizable_moments(rng, m):
    """Exact second moments of a joint Gaussian (x, y) pair.

    Built from a random SPD covariance of the stacked vector (x, y), so the
    triple is realizable by construction and the objectives stay nonnegative.
    """
    g = rng.standard_normal((2 * m, 2 * m))
    cov = g @ g.T + 0.1 * np.eye(2 * m)
    return DataMoments(cov[:m, :m], cov[m:, :m], cov[m:, m:]), cov


def random_model_state(rng, n, m):
    return ModelState(
        rng.standard_normal((n, m)),
        rng.standard_normal((n, n)),
        rng.standard_normal((n, m)),
    )


def fd_grad(f, x0, h=1e-5):
    """Central finite-difference gradient of a scalar function of a matrix."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros(x0.size)
    for k in range(x0.size):
        e = np.zeros(x0.size)
        e[k] = h
        e = e.reshape(x0.shape)
        g[k] = (f(x0 + e) - f(x0 - e)) / (2 * h)
    return g.reshape(x0.shape)


def rel_err(got, want):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    return np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
