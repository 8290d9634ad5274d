from __future__ import annotations

import numpy as np
import pytest

from trotterbounds.hamiltonian import SystemSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_jellium():
    return SystemSpec.jellium((2, 2), 2, 5.0)


def random_hermitian(rng, n, complex_=False):
    A = rng.normal(size=(n, n))
    if complex_:
        A = A + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2
