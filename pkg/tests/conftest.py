import numpy as np
import pytest

from decminimax import Topology, make_quadratic_problem, mixing_for_topology


@pytest.fixture(scope="session")
def ring8_lazy():
    return mixing_for_topology(Topology(kind="ring", K=8), lazy=True)


@pytest.fixture(scope="session")
def ring4_lazy():
    return mixing_for_topology(Topology(kind="ring", K=4), lazy=True)


@pytest.fixture(scope="session")
def quad_problem():
    """Small offline quadratic shared by engine/estimator tests."""
    return make_quadratic_problem(K=8, d1=3, d2=2, N=64, sigma=0.5, seed=5)


def random_connected_mixing(rng, K, lazy=True):
    """A lazy Metropolis matrix on a random connected graph."""
    topo = Topology(kind="random", K=K, edge_prob=0.4,
                    seed=int(rng.integers(0, 2**31)))
    return mixing_for_topology(topo, lazy=lazy)


def assert_close(a, b, tol, label=""):
    err = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    assert err <= tol, f"{label} residual {err:.3e} > {tol:g}"
