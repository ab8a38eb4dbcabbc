import numpy as np
import pytest

from mercer_kit import _kernels
from mercer_kit import basis as B


@pytest.fixture(scope="session", autouse=True)
def jit_warmup():
    """Compile the numba kernels once so timed checks measure steady-state cost."""
    x = np.linspace(-1.0, 1.0, 4)
    _kernels.meyer_table(x, 1.0, 0.1, np.ones(3), 3)
    _kernels.hermite_table(x, 3)
    _kernels.bilinear_kahan(np.ones((2, 2), complex), np.ones((2, 2), complex))


@pytest.fixture(scope="session")
def hermite10():
    return B.build_hermite_basis(10)


@pytest.fixture(scope="session")
def hermite16():
    return B.build_hermite_basis(16)


@pytest.fixture(scope="session")
def mother():
    return B.synthesize_mother_wavelet(B.build_meyer_bell())


@pytest.fixture(scope="session")
def wavelet16(mother):
    return B.enumerate_wavelet_basis(mother, 16)


@pytest.fixture(scope="session")
def wavelet24(mother):
    return B.enumerate_wavelet_basis(mother, 24)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
