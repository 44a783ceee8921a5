import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivenoat.analytics import (
    CfParams,
    ExpansionParams,
    ExpansionValidityWarning,
    cf_values,
    characteristic_function,
    fit_power_law,
    gaussian_cf_approx_state,
    ghz_fidelity_closed_form,
    min_variance_closed_form,
    min_variance_expansion,
    moments_closed_form,
    oat_mixture_state,
    oat_mixture_weights,
    optimal_squeezing,
    reduced_spin_state,
)
from drivenoat.boson import BosonInput, BosonSpace, input_state, ladder_operators, photon_distribution, truncation_recommendation
from drivenoat.errors import TruncationInsufficient
from drivenoat.model import ModelParams, h_eff_tc
from drivenoat.numerics import kron_states, partial_trace_boson
from drivenoat.observables import fidelity, purity, squeezing_parameter
from drivenoat.propagation import TimeGrid, evolve_unitary_static
from drivenoat.spin import CssSpec, SpinEnsemble, collective_operators, css_state, ghz_state, oat_state

INPUTS = [BosonInput.fock(2), BosonInput.coherent(0.9), BosonInput.thermal(0.6), BosonInput.squeezed(0.45)]


def _series_cf(inp, chi_t, m_diff):
    n_max = truncation_recommendation(inp)
    p = photon_distribution(inp, n_max)
    n = np.arange(n_max + 1)
    return np.sum(p * np.exp(2j * n * chi_t * m_diff))


@pytest.mark.parametrize("inp", INPUTS)
def test_cf_normalization(inp):
    assert characteristic_function(CfParams(inp, 0.8, 0)) == pytest.approx(1.0)
    assert abs(characteristic_function(CfParams(inp, 0.8, 3))) <= 1 + 1e-12


def test_cf_known_values():
    # chi t * m_diff = pi/2
    assert characteristic_function(CfParams(BosonInput.coherent(1.0), math.pi, 1)) == pytest.approx(math.exp(-2), abs=1e-12)
    assert characteristic_function(CfParams(BosonInput.thermal(1.0), math.pi, 1)) == pytest.approx(1 / 3, abs=1e-12)
    assert CfParams(BosonInput.fock(0), 0.4).chi_t == pytest.approx(0.2)


@pytest.mark.parametrize("inp", INPUTS)
def test_cf_matches_series(inp, rng):
    for chi_t in rng.uniform(0, 2 * math.pi, 20):
        for k in range(-10, 11):
            assert complex(cf_values(inp, chi_t, k)) == pytest.approx(_series_cf(inp, chi_t, k), abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 1.3), st.floats(0.0, 7.0), st.integers(-12, 12))
def test_squeezed_cf_branch(r, chi_t, k):
    inp = BosonInput.squeezed(r)
    assert complex(cf_values(inp, chi_t, k)) == pytest.approx(_series_cf(inp, chi_t, k), abs=1e-8)


def test_reduced_state_at_zero_is_css():
    rho = reduced_spin_state(6, BosonInput.thermal(1.0), 0.0)
    css = css_state(SpinEnsemble(6), CssSpec(math.pi / 2, 0.0))
    assert np.allclose(rho.data, css.density(), atol=1e-14)
    assert purity(rho) == pytest.approx(1.0)


@pytest.mark.parametrize("chi_t", [0.1, 0.7, 2.0])
def test_fock_reduced_state_is_pure(chi_t):
    assert purity(reduced_spin_state(8, BosonInput.fock(3), chi_t)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n_atoms", [2, 4, 10])
@pytest.mark.parametrize("inp", INPUTS)
def test_reduced_state_matches_brute_force(n_atoms, inp):
    ens = SpinEnsemble(n_atoms)
    n_max = truncation_recommendation(inp)
    space = BosonSpace(n_max)
    psi0 = kron_states(css_state(ens, CssSpec(math.pi / 2, 0.0)), input_state(space, inp))
    h = h_eff_tc(ModelParams(n_atoms), collective_operators(ens), ladder_operators(space))
    grid = TimeGrid.from_samples([0.0, 0.2, 1.1])
    for t, st_ in zip(grid.samples, evolve_unitary_static(h, psi0, grid)):
        assert np.max(np.abs(partial_trace_boson(st_).data - reduced_spin_state(n_atoms, inp, t).data)) <= 1e-9


def test_gaussian_state_limits():
    ens = SpinEnsemble(10)
    rho = gaussian_cf_approx_state(10, 0.0, 0.3)
    assert np.allclose(rho.data, oat_state(ens, 0.6).density(), atol=1e-14)
    exact = reduced_spin_state(10, BosonInput.coherent(1.0), 0.02)
    approx = gaussian_cf_approx_state(10, 1.0, 0.02)
    trace_distance = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(exact.data - approx.data)))
    assert trace_distance < 1e-3


def test_extreme_coherence_damping():
    n, alpha, chi_t = 10, 0.7, 0.03
    with_damp = gaussian_cf_approx_state(n, alpha, chi_t, include_rotation=False).data
    bare = gaussian_cf_approx_state(n, 0.0, chi_t).data
    ratio = abs(with_damp[-1, 0] / bare[-1, 0])
    assert ratio == pytest.approx(math.exp(-2 * alpha**2 * chi_t**2 * n**2), rel=1e-12)


def _moments_from_state(rho, n):
    ops = collective_operators(SpinEnsemble(n))
    sy, sz = ops.sy.data, ops.sz.data
    r = rho.data
    return (
        np.trace(r @ ops.sx.data).real,
        np.trace(r @ sy @ sy).real,
        np.trace(r @ (sy @ sz + sz @ sy)).real,
    )


def test_moments_css_values():
    m = moments_closed_form(10, 0.0, 0.0)
    assert m == pytest.approx((5.0, 2.5, 0.0))


@pytest.mark.parametrize("n,alpha,chi_t", [(10, 1.0, 0.05), (7, 0.5, 0.2), (12, 1.3, 0.01)])
def test_moments_match_gaussian_state(n, alpha, chi_t):
    rho = gaussian_cf_approx_state(n, alpha, chi_t, include_rotation=False)
    sx, sy2, tyz = _moments_from_state(rho, n)
    m = moments_closed_form(n, alpha, chi_t)
    assert (m.sx_mean, m.sy2_mean) == pytest.approx((sx, sy2), abs=1e-8)
    # the closed form keeps the opposite sign convention for the y-z correlation
    assert m.tyz_mean == pytest.approx(-tyz, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.floats(0.01, math.pi / 2 - 0.01), st.floats(0, 2))
def test_tyz_negative(n, chi_t, alpha):
    assert moments_closed_form(n, alpha, chi_t).tyz_mean < 0


@pytest.mark.parametrize("n,alpha,chi_t", [(10, 1.0, 0.05), (10, 0.0, 0.1), (20, 2.0, 0.01)])
def test_min_variance_is_covariance_eigenvalue(n, alpha, chi_t):
    rho = gaussian_cf_approx_state(n, alpha, chi_t, include_rotation=False)
    assert min_variance_closed_form(n, alpha, chi_t) == pytest.approx(squeezing_parameter(rho).min_variance, abs=1e-8)


def test_min_variance_css_limit():
    assert min_variance_closed_form(10, 1.0, 0.0) == 2.5
    assert min_variance_closed_form(10, 1.0, 1e-9) == pytest.approx(2.5, abs=1e-6)


def test_expansion_params_and_vacuum_form():
    p = ExpansionParams.build(20, 0.0, 0.01)
    assert (p.delta, p.delta_prime, p.beta, p.mu_prime, p.vartheta) == pytest.approx((0.1, 0.0, 0.001, 0.0, 9.0))
    n, chi_t = 400, 0.002
    s = n / 2
    d = s * chi_t
    b = s * (2 * chi_t) ** 2 / 4
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExpansionValidityWarning)
        got = min_variance_expansion(n, 0.0, chi_t)
    assert got == pytest.approx(s / 2 * (1 / (4 * d * d) + 2 * b * b / 3), rel=1e-12)


def test_expansion_flags_moderate_mu_regime():
    # mu = 0.01 with |alpha|^2 = 20 at N = 200: B/A is about 1.4, so the expansion is not controlled
    with pytest.warns(ExpansionValidityWarning):
        approx = min_variance_expansion(200, math.sqrt(20), 0.005)
    exact = min_variance_closed_form(200, math.sqrt(20), 0.005)
    assert abs(approx - exact) / exact > 0.02


@pytest.mark.parametrize("n,alpha2,mu", [(2000, 20.0, 0.03), (4000, 100.0, 0.02), (800, 4.0, 0.05)])
def test_expansion_against_closed_form(n, alpha2, mu):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExpansionValidityWarning)
        approx = min_variance_expansion(n, math.sqrt(alpha2), mu / 2)
    exact = min_variance_closed_form(n, math.sqrt(alpha2), mu / 2)
    assert abs(approx - exact) / exact < 0.02


def test_expansion_forms_agree_in_regime():
    n, alpha, chi_t = 2000, 1.0, 0.003
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExpansionValidityWarning)
        vals = [min_variance_expansion(n, alpha, chi_t, order=o) for o in ("compact", "full", "reduced")]
    exact = min_variance_closed_form(n, alpha, chi_t)
    for v in vals:
        assert abs(v - exact) / exact < 0.05


def test_expansion_warning_and_errors():
    with pytest.warns(ExpansionValidityWarning):
        min_variance_expansion(10, 3.0, 0.2)
    with pytest.raises(ValueError):
        min_variance_expansion(10, 0.0, 0.0)
    with pytest.raises(ValueError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExpansionValidityWarning)
            min_variance_expansion(10, 0.0, 0.01, order="bogus")


def test_mixture_weights():
    assert oat_mixture_weights(BosonInput.fock(3), 0.4) == [(1.0, pytest.approx(1.2))]
    w = oat_mixture_weights(BosonInput.coherent(1.0), 0.3)
    for n, (p, angle) in enumerate(w[:6]):
        assert p == pytest.approx(math.exp(-1) / math.factorial(n), rel=1e-12)
        assert angle == pytest.approx(0.3 * n)
    assert sum(p for p, _ in w) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(TruncationInsufficient):
        oat_mixture_weights(BosonInput.coherent(2.0), 0.3, n_max=4)


@pytest.mark.parametrize("inp", INPUTS)
@pytest.mark.parametrize("mu", [0.3, math.pi])
def test_mixture_reconstructs_reduced_state(inp, mu):
    assert np.allclose(oat_mixture_state(8, inp, mu).data, reduced_spin_state(8, inp, mu / 2).data, atol=1e-9)


def test_mixture_at_pi_is_two_ghz_mixture():
    ens = SpinEnsemble(6)
    rho = oat_mixture_state(6, BosonInput.coherent(1.0), math.pi).data
    ghz = ghz_state(ens).data
    other = np.exp(1j * math.pi * ens.m) * ghz
    p_even = 0.5 * (1 + math.exp(-2))
    target = p_even * np.outer(ghz, ghz.conj()) + (1 - p_even) * np.outer(other, other.conj())
    assert np.allclose(rho, target, atol=1e-9)


def test_ghz_fidelity_closed_forms():
    assert ghz_fidelity_closed_form(BosonInput.fock(0)) == 1.0
    assert ghz_fidelity_closed_form(BosonInput.fock(1)) == 0.0
    assert ghz_fidelity_closed_form(BosonInput.coherent(1.0)) == pytest.approx(0.567668, abs=1e-6)
    assert ghz_fidelity_closed_form(BosonInput.squeezed(0.9)) == 1.0


@pytest.mark.parametrize("inp", INPUTS + [BosonInput.fock(1), BosonInput.squeezed(1.2)])
def test_ghz_fidelity_closed_form_vs_state(inp):
    ens = SpinEnsemble(10)
    f = fidelity(reduced_spin_state(10, inp, math.pi / 2), ghz_state(ens))
    assert f == pytest.approx(ghz_fidelity_closed_form(inp), abs=1e-8)


def test_vacuum_optimum_scaling():
    sizes = np.array([50, 100, 200, 400, 800])
    xi2 = [optimal_squeezing(int(n))[1] for n in sizes]
    slope, _ = fit_power_law(sizes / 2, xi2)
    assert slope == pytest.approx(-2 / 3, abs=0.05)


def test_fit_power_law_exact():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    assert fit_power_law(x, 3 * x**-0.4) == pytest.approx((-0.4, 3.0))
