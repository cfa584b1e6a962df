import numpy as np
import pytest

from nanofiber_cqed.physics import AtomSpec, CavitySpec


@pytest.fixture
def cavity():
    """kappa_r = 2.5 with 0.1 transmission and mirror loss."""
    return CavitySpec(2.5, 0.1, 0.1)


@pytest.fixture
def pair(cavity):
    return [AtomSpec(7.8), AtomSpec(7.8)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(dim, rng, rank=None):
    rank = rank or dim
    z = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real
