import pytest

from oamtomo.basis import build_enlarged_basis
from oamtomo.optics import make_grid, reference_grid


@pytest.fixture(scope="session")
def ref_grid():
    return reference_grid()


@pytest.fixture(scope="session")
def ref_basis(ref_grid):
    return build_enlarged_basis(ref_grid)


@pytest.fixture(scope="session")
def small_grid():
    """Coarser grid for integration-style tests where the pinned optics
    tolerances are not at stake."""
    return make_grid(4.0, 129)


@pytest.fixture(scope="session")
def small_basis(small_grid):
    return build_enlarged_basis(small_grid)
