import numpy as np
import pytest

import qexpand as qx
from qexpand.linalg import RngSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def pauli():
    return qx.pauli_tuple()


@pytest.fixture
def iz_tuple():
    mats = np.stack([np.eye(2, dtype=complex), np.diag([1.0, -1.0]).astype(complex)])
    return qx.MatrixTuple(mats, unitary=True)


def identity_tuple(n, N):
    return qx.MatrixTuple(np.stack([np.eye(N, dtype=complex)] * n), unitary=True)


def random_tuple(n, N, gen):
    """Non-unitary Ginibre-entry tuple."""
    mats = gen.standard_normal((n, N, N)) + 1j * gen.standard_normal((n, N, N))
    return qx.MatrixTuple(mats)


@pytest.fixture
def spec_rng():
    return RngSpec(20260810, 0)
