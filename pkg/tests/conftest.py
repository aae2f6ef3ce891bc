import numpy as np
import pytest

from nlheat import Domain1D, GridFunction, SpectralOperator


@pytest.fixture
def unit_domain():
    return Domain1D(1.0, 64)


@pytest.fixture
def unit_operator(unit_domain):
    return SpectralOperator(unit_domain)


def sine_mode(domain, mode=1, amplitude=1.0):
    k = mode * np.pi / domain.length
    return GridFunction(domain, amplitude * np.sin(k * domain.nodes))


def random_grid_function(domain, rng, scale=1.0):
    return GridFunction(domain, scale * rng.standard_normal(domain.n_interior))
