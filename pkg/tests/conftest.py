import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from harmosync.graph import build_laplacian, spectral_decomposition, standin_graph  # noqa: E402
from harmosync.propagation import system_matrices  # noqa: E402

OMEGA = math.sqrt(math.pi / 2)
TAU = 0.1


@pytest.fixture(scope="session")
def standin_L():
    return build_laplacian(standin_graph())


@pytest.fixture(scope="session")
def standin_sys(standin_L):
    return system_matrices(OMEGA, TAU, standin_L)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
