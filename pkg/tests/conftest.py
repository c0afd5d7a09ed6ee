import numpy as np
import pytest

from timomem import (BeamParams, HistoryGrid, SpatialGrid, assemble_generator,
                     exponential_kernel, polynomial_kernel)


@pytest.fixture(scope="session")
def exp1():
    return exponential_kernel(0.5, 1.0, b=1.0)


@pytest.fixture(scope="session")
def poly125():
    return polynomial_kernel(1.0, 4.0, b=1.0)


@pytest.fixture(scope="session")
def small_gen(exp1):
    """Modest generator shared by read-only tests (n=24, J=32)."""
    sgrid = SpatialGrid(24)
    hgrid = HistoryGrid.build(exp1, 32, 10.0)
    return assemble_generator(BeamParams(), exp1, sgrid, hgrid)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
