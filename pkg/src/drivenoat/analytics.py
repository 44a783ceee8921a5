"""Closed-form results for the dispersive model with a bosonic input.

Everything here is expressed through the twisting phase ``mu = 2 chi t``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from drivenoat.boson import BosonInput, photon_distribution, truncation_recommendation
from drivenoat.errors import TruncationInsufficient
from drivenoat.numerics import QuantumState
from drivenoat.spin import SpinEnsemble, equatorial_css_amplitudes, oat_state


class ExpansionValidityWarning(UserWarning):
    """Raised (as a warning) when a small-parameter expansion is used outside its regime."""


@dataclass(frozen=True)
class CfParams:
    input: BosonInput
    mu: float
    m_diff: int = 1

    @property
    def chi_t(self) -> float:
        return 0.5 * self.mu


def cf_values(inp: BosonInput, chi_t: float, m_diff) -> np.ndarray:
    """Characteristic function ``sum_n |c_n|^2 exp(2 i n chi t (m - m'))``, vectorized over m_diff."""
    k = np.asarray(m_diff, dtype=float)
    z = np.exp(2j * chi_t * k)
    v = inp.value
    if inp.kind == "fock":
        return z ** int(np.real(v))
    if inp.kind == "coherent":
        return np.exp(-(abs(v) ** 2) * (1.0 - z))
    if inp.kind == "thermal":
        return 1.0 / (1.0 + np.real(v) * (1.0 - z))
    r = float(np.real(v))
    # 1 - tanh^2 r e^{i x} stays in the right half plane, so the principal root is continuous
    return 1.0 / np.sqrt(np.cosh(r) ** 2 - np.sinh(r) ** 2 * z**2)


def characteristic_function(p: CfParams) -> complex:
    return complex(cf_values(p.input, p.chi_t, p.m_diff))


def _m_grid(N: int) -> tuple[np.ndarray, np.ndarray]:
    m = SpinEnsemble(N).m
    return m, m[:, None] - m[None, :]


def reduced_spin_state(N: int, inp: BosonInput, chi_t: float) -> QuantumState:
    """Spin marginal of the CSS x input evolved under the dispersive Hamiltonian."""
    ens = SpinEnsemble(N)
    c = equatorial_css_amplitudes(ens)
    m, md = _m_grid(N)
    m2 = m**2
    phase = np.exp(-1j * chi_t * (m2[:, None] - m2[None, :]))
    rho = np.outer(c, c) * phase * cf_values(inp, chi_t, md)
    return QuantumState(rho, ens.basis)


def gaussian_cf_approx_state(N: int, alpha: complex, chi_t: float, include_rotation: bool = True) -> QuantumState:
    """Reduced state with the coherent characteristic function expanded to second order in chi t."""
    ens = SpinEnsemble(N)
    c = equatorial_css_amplitudes(ens)
    m, md = _m_grid(N)
    a2 = abs(alpha) ** 2
    m2 = m**2
    cf = np.exp(-2 * a2 * chi_t**2 * md**2)
    if include_rotation:
        cf = cf * np.exp(2j * a2 * chi_t * md)
    rho = np.outer(c, c) * np.exp(-1j * chi_t * (m2[:, None] - m2[None, :])) * cf
    return QuantumState(rho, ens.basis)


class Moments(NamedTuple):
    sx_mean: float
    sy2_mean: float
    tyz_mean: float


def _mu(alpha: complex, chi_t: float) -> tuple[float, float]:
    return 2 * chi_t, 4 * abs(alpha) ** 2 * chi_t**2


def moments_closed_form(N: int, alpha: complex, chi_t: float) -> Moments:
    """<S_x>, <S_y^2> and <S_y S_z + S_z S_y> of the Gaussian-damped state (rotation removed).

    ``tyz_mean`` is negative for 0 < mu < pi. The state evolved under
    ``+chi S_z^2`` with the usual ``S_y`` carries the opposite sign; only its
    square enters the minimal variance.
    """
    s = N / 2
    mu, mup = _mu(alpha, chi_t)
    sx = math.exp(-mup / 2) * s * math.cos(mu / 2) ** (2 * s - 1)
    sy2 = s / 2 * (s + 0.5) - math.exp(-2 * mup) * (s / 2) * (s - 0.5) * math.cos(mu) ** (2 * s - 2)
    tyz = -2 * math.exp(-mup / 2) * s * (s - 0.5) * math.cos(mu / 2) ** (2 * s - 2) * math.sin(mu / 2)
    return Moments(sx, sy2, tyz)


def _min_variance_mu(s: float, mu, mup):
    mu = np.asarray(mu, dtype=float)
    mup = np.asarray(mup, dtype=float)
    a = 1.0 - np.exp(-2 * mup) * np.cos(mu) ** (2 * s - 2)
    b = 4 * np.exp(-mup / 2) * np.cos(mu / 2) ** (2 * s - 2) * np.sin(mu / 2)
    root = np.sqrt(a**2 + b**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        # a - sqrt(a^2 + b^2) written without cancellation; equals 0 at the CSS point
        gap = np.where(root > 0, -(b**2) / (a + root), 0.0)
    return s / 2 * (1 + 0.5 * (s - 0.5) * gap)


def min_variance_closed_form(N: int, alpha: complex, chi_t: float) -> float:
    """Smallest transverse variance in the plane orthogonal to x for the Gaussian-damped state."""
    mu, mup = _mu(alpha, chi_t)
    return float(_min_variance_mu(N / 2, mu, mup))


@dataclass(frozen=True)
class ExpansionParams:
    delta: float
    delta_prime: float
    beta: float
    mu_prime: float
    vartheta: float

    @classmethod
    def build(cls, N: int, alpha: complex, chi_t: float) -> ExpansionParams:
        s = N / 2
        mu, mup = _mu(alpha, chi_t)
        return cls(s * mu / 2, s * mup / 2, s * mu**2 / 4, mup, 2 * abs(alpha) ** 2 + s - 1)


def min_variance_expansion(
    N: int,
    alpha: complex,
    chi_t: float,
    order: Literal["compact", "full", "reduced"] = "compact",
) -> float:
    """Small-mu expansions of the minimal variance.

    ``compact`` is the compact form in delta, delta' and beta; ``full`` keeps the
    1/vartheta^2 term and ``reduced`` drops it. A warning is
    emitted when vartheta mu^2, mu or |alpha|^2/S are not small.
    """
    s = N / 2
    mu = 2 * chi_t
    if mu <= 0:
        raise ValueError("the expansion diverges at mu = 0")
    p = ExpansionParams.build(N, alpha, chi_t)
    a2 = abs(alpha) ** 2
    if p.vartheta * mu**2 > 0.1 or mu > 0.1 or a2 > 0.1 * s:
        warnings.warn(
            f"expansion outside its regime: vartheta*mu^2={p.vartheta * mu**2:.3g}, mu={mu:.3g}, |alpha|^2/S={a2 / s:.3g}",
            ExpansionValidityWarning,
            stacklevel=2,
        )
    if order == "compact":
        d, dp = p.delta, p.delta_prime
        tot = dp + d**2
        return s / 2 * (dp / tot + d**4 / (4 * tot**3) + 2 * p.beta**2 / 3)
    th = p.vartheta
    if order == "full":
        return s / 2 * (1 - s / th + s / (2 * th**2) + s / (th**3 * mu**2) + th * mu**4 * s / 24)
    if order == "reduced":
        x = 2 * a2 + s
        return s / 2 * (2 * a2 / x + s / (x**3 * mu**2) + s**2 * mu**4 / 24)
    raise ValueError(f"unknown expansion order {order!r}")


def oat_mixture_weights(inp: BosonInput, mu: float, n_max: int | None = None) -> list[tuple[float, float]]:
    """Photon-number weights and the z-rotation ``n mu`` each component imprints."""
    if n_max is None:
        n_max = truncation_recommendation(inp)
    p = photon_distribution(inp, n_max)
    if abs(p.sum() - 1.0) > 1e-10:
        raise TruncationInsufficient(f"n_max={n_max} keeps {p.sum():.12f} of the distribution")
    return [(float(w), n * mu) for n, w in enumerate(p) if w > 0]


def oat_mixture_state(N: int, inp: BosonInput, mu: float, n_max: int | None = None) -> QuantumState:
    ens = SpinEnsemble(N)
    rho = np.zeros((ens.dim, ens.dim), dtype=complex)
    for w, angle in oat_mixture_weights(inp, mu, n_max):
        psi = oat_state(ens, mu, angle).data
        rho += w * np.outer(psi, psi.conj())
    return QuantumState(rho, ens.basis)


def ghz_fidelity_closed_form(inp: BosonInput) -> float:
    """GHZ fidelity at chi t = pi/2: the probability of an even photon number."""
    v = inp.value
    if inp.kind == "fock":
        return 1.0 if int(np.real(v)) % 2 == 0 else 0.0
    if inp.kind == "coherent":
        return 0.5 * (1 + math.exp(-2 * abs(v) ** 2))
    if inp.kind == "thermal":
        nbar = float(np.real(v))
        return (1 + nbar) / (1 + 2 * nbar)
    return 1.0


def optimal_squeezing(N: int, alpha: complex = 0.0, mus: np.ndarray | None = None) -> tuple[float, float]:
    """(mu, xi^2) minimizing the closed-form variance at fixed |alpha| over a mu grid."""
    s = N / 2
    if mus is None:
        mus = np.geomspace(1e-4, 1.0, 4001)
    xi2 = 2 * _min_variance_mu(s, mus, abs(alpha) ** 2 * mus**2) / s
    i = int(np.argmin(xi2))
    return float(mus[i]), float(xi2[i])


def fit_power_law(x, y) -> tuple[float, float]:
    """Least-squares (exponent, prefactor) of ``y = c x^p`` in log-log space."""
    slope, icpt = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(math.exp(icpt))
