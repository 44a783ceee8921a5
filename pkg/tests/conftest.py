import numpy as np
import pytest

from drivenoat.spin import CssSpec, SpinEnsemble, collective_operators, css_state


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_density(rng, d, rank=None):
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def ens10():
    return SpinEnsemble(10)


@pytest.fixture
def ops10(ens10):
    return collective_operators(ens10)


@pytest.fixture
def xcss10(ens10):
    return css_state(ens10, CssSpec(np.pi / 2, 0.0))
