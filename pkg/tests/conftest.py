import numpy as np
import pytest

from nonlocal_sis import (
    CoefficientField,
    DomainSpec,
    KernelSpec,
    ModelParams,
    assemble_dispersal,
    build_grid,
)


@pytest.fixture
def two_cell():
    """Two midpoint cells on the unit interval with a unit-radius tophat.

    Everything about this instance is computable by hand: the kernel is
    constant over all node pairs, so K = [[0.25, 0.25], [0.25, 0.25]].
    """
    grid = build_grid(2, DomainSpec(0.0, 1.0))
    kernel = KernelSpec.tophat(1.0)
    return grid, kernel


@pytest.fixture
def two_cell_K(two_cell):
    grid, kernel = two_cell
    return assemble_dispersal(grid, kernel)


def const_field(grid, value, role=""):
    return CoefficientField(np.full(grid.n, float(value)), role)


@pytest.fixture
def endemic_setup(two_cell):
    """The hand-solved persistence instance: beta=2, gamma=0.5, lam=1."""
    grid, kernel = two_cell
    K = assemble_dispersal(grid, kernel)
    beta = const_field(grid, 2.0, "beta")
    gamma = const_field(grid, 0.5, "gamma")
    lam = const_field(grid, 1.0, "lambda")
    params = ModelParams(d_S=1.0, d_I=1.0)
    return grid, K, beta, gamma, lam, params
