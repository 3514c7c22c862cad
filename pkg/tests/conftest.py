import numpy as np
import pytest

from dualmink.io import write_document
from dualmink.measures import DiscreteMeasure
from dualmink.sphere import build_grid


def signed_basis(n: int) -> np.ndarray:
    """ e_1, -e_1, e_2, -e_2, ... """
    eye = np.eye(n)
    return np.vstack([v for e in eye for v in (e, -e)])


@pytest.fixture(scope="session")
def circle():
    return build_grid(2, 256)


@pytest.fixture(scope="session")
def sphere():
    return build_grid(3, 96)


@pytest.fixture(scope="session")
def coarse_sphere():
    return build_grid(3, 48)


@pytest.fixture(scope="session")
def basis3():
    """ Uniform measure on ±e_1, ±e_2, ±e_3 """
    return DiscreteMeasure(signed_basis(3), np.full(6, 1 / 6))


@pytest.fixture(scope="session")
def heavy_line():
    """ 0.6 of the mass on the line through e_1 """
    return DiscreteMeasure(signed_basis(3), [0.3, 0.3, 0.1, 0.1, 0.1, 0.1])


@pytest.fixture
def write(tmp_path):
    """ Write a document under tmp_path and return its path as a string """
    def _write(name: str, document: dict) -> str:
        path = tmp_path / name
        write_document(path, document)
        return str(path)
    return _write
