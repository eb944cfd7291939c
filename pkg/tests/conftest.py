import numpy as np
import pytest

from phasefrac.energy import DiffuseState, ElasticModel
from phasefrac.fields import Grid, ScalarField, VectorField
from phasefrac.potentials import make_default_potentials


@pytest.fixture(scope="session")
def P():
    return make_default_potentials()


@pytest.fixture()
def elastic_1d():
    return ElasticModel(e0=np.array([[1.0]]))


@pytest.fixture()
def elastic_1d_free():
    return ElasticModel(e0=np.zeros((1, 1)))


@pytest.fixture()
def elastic_2d_free():
    return ElasticModel(e0=np.zeros((2, 2)))


def random_state(grid: Grid, seed: int, eps: float = 0.07, delta: float = 0.11) -> DiffuseState:
    """Random admissible state with z strictly inside (0, 1)."""
    rng = np.random.Generator(np.random.Philox(seed))
    d = grid.dim
    return DiffuseState(
        c=ScalarField(grid, rng.uniform(-0.3, 1.3, grid.cells)),
        u=VectorField(grid, rng.normal(0.0, 0.5, grid.cells + (d,))),
        z=ScalarField(grid, rng.uniform(0.05, 0.95, grid.cells)),
        eps=eps, delta=delta)
