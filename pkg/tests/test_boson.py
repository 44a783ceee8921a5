import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from drivenoat.boson import (
    BosonInput,
    BosonSpace,
    input_state,
    ladder_operators,
    photon_distribution,
    truncation_recommendation,
)
from drivenoat.errors import TruncationInsufficient


def test_ladder_small():
    ops = ladder_operators(BosonSpace(1))
    assert np.array_equal(ops.a.data, [[0, 1], [0, 0]])


@pytest.mark.parametrize("n_max", [1, 5, 20])
def test_commutator_truncation_artifact(n_max):
    ops = ladder_operators(BosonSpace(n_max))
    comm = ops.a.data @ ops.a_dag.data - ops.a_dag.data @ ops.a.data
    expected = np.eye(n_max + 1)
    expected[-1, -1] = -n_max
    assert np.allclose(comm, expected, atol=1e-12)
    assert np.array_equal(np.diag(ops.number.data).real, np.arange(n_max + 1))


def test_input_validation():
    with pytest.raises(ValueError):
        BosonInput("fock", 1.5)
    with pytest.raises(ValueError):
        BosonInput.thermal(-1)
    with pytest.raises(ValueError):
        BosonInput("cat", 1)


def test_fock_vacuum():
    psi = input_state(BosonSpace(4), BosonInput.fock(0)).data
    assert np.array_equal(psi, [1, 0, 0, 0, 0])


def test_coherent_weights():
    p = np.abs(input_state(BosonSpace(20), BosonInput.coherent(1.0)).data) ** 2
    assert p[0] == pytest.approx(math.exp(-1), abs=1e-12)
    assert p[1] == pytest.approx(math.exp(-1), abs=1e-12)


def test_coherent_phase_follows_alpha():
    alpha = 0.7 * np.exp(0.4j)
    psi = input_state(BosonSpace(25), BosonInput.coherent(alpha)).data
    ref = np.array([math.exp(-abs(alpha) ** 2 / 2) * alpha**n / math.sqrt(math.factorial(n)) for n in range(26)])
    assert np.allclose(psi, ref / np.linalg.norm(ref), atol=1e-12)


def test_squeezed_has_no_odd_components():
    psi = input_state(BosonSpace(60), BosonInput.squeezed(0.8)).data
    assert np.all(psi[1::2] == 0)


def test_squeezed_weights_formula():
    r = 0.6
    p = photon_distribution(BosonInput.squeezed(r), 12)
    for n in range(0, 13, 2):
        ref = math.tanh(r) ** n * math.factorial(n) / (2**n * math.cosh(r) * math.factorial(n // 2) ** 2)
        assert p[n] == pytest.approx(ref, rel=1e-12)


def test_thermal_is_diagonal_density():
    st_ = input_state(BosonSpace(60), BosonInput.thermal(1.0))
    assert not st_.is_pure
    assert np.allclose(st_.data, np.diag(np.diag(st_.data)))


def test_insufficient_truncation():
    with pytest.raises(TruncationInsufficient):
        input_state(BosonSpace(3), BosonInput.coherent(2.0))


def test_recommendation_trivial():
    assert truncation_recommendation(BosonInput.fock(3)) == 3
    assert truncation_recommendation(BosonInput.thermal(0.0)) == 0


def test_recommendation_coherent_poisson_tail():
    n = truncation_recommendation(BosonInput.coherent(1.0))
    assert n <= 19
    assert poisson.sf(n, 1.0) < 1e-12
    assert poisson.sf(n - 1, 1.0) >= 1e-12


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(["coherent", "thermal", "squeezed"]),
    st.floats(0.05, 2.0),
)
def test_mean_photon_number(kind, value):
    inp = BosonInput(kind, value)
    n_max = truncation_recommendation(inp)
    space = BosonSpace(n_max)
    state = input_state(space, inp)
    if state.is_pure:
        assert abs(np.linalg.norm(state.data) - 1) <= 1e-10
    num = ladder_operators(space).number.data
    mean = np.trace(state.density() @ num).real
    assert mean == pytest.approx(inp.mean_photons, abs=1e-8)
