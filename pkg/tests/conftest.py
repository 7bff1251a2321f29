import numpy as np
import pytest

from galerkin_nls import build_basis

KINDS = ("torus1d", "interval_dirichlet", "interval_neumann", "sphere_zonal")


@pytest.fixture(scope="session")
def bases():
    return {k: build_basis(k, 32) for k in KINDS}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_coeffs(rng, N, batch=(), decay=1.0):
    c = rng.standard_normal(batch + (N,)) + 1j * rng.standard_normal(batch + (N,))
    return c / (1.0 + np.arange(N)) ** decay
