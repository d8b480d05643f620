import numpy as np
import pytest

from neumann_hadamard.fem import solve_mesh
from neumann_hadamard.geometry import Rectangle, unit_disk
from neumann_hadamard.meshing import generate_mesh, radial_for, rectangle_mesh


def disk_solution(n_angular: int, count: int = 8):
    return solve_mesh(generate_mesh(unit_disk(), radial_for(n_angular), n_angular), count)


@pytest.fixture(scope="session")
def disk256():
    return disk_solution(256)


@pytest.fixture(scope="session")
def disk512():
    return disk_solution(512)


@pytest.fixture(scope="session")
def square32():
    return solve_mesh(rectangle_mesh(Rectangle(1.0, 1.0), 32, 32), 6)


@pytest.fixture(scope="session")
def square64():
    return solve_mesh(rectangle_mesh(Rectangle(1.0, 1.0), 64, 64), 6)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
