import pytest

from diskproj import disk as dk
from diskproj import measures as ms


@pytest.fixture(scope="session")
def leb_quad5():
    """Lebesgue quadrature, J=5, j0=1: 132 cells."""
    return dk.build_quadrature(ms.lebesgue(), J=5, j0=1)


@pytest.fixture(scope="session")
def leb_quad6():
    """Lebesgue quadrature, J=6, j0=1: 260 cells."""
    return dk.build_quadrature(ms.lebesgue(), J=6, j0=1)
