"""Spin observables: squeezing parameter, fidelities, purity and sphere maps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.integrate import simpson
from scipy.special import sph_harm_y

from drivenoat.errors import BasisMismatch, ResolutionTooLow
from drivenoat.numerics import QuantumState
from drivenoat.spin import SpinEnsemble, collective_operators

ZERO_SPIN = 1e-9
MIN_RESOLUTION = 16


def _spin_density(rho: QuantumState) -> np.ndarray:
    if rho.basis.kind != "spin":
        raise BasisMismatch(f"expected a spin state, got {rho.basis}")
    return rho.density()


def _expect(rho: np.ndarray, op: np.ndarray) -> complex:
    return np.einsum("ij,ji->", rho, op)


def spin_means(rho: QuantumState) -> np.ndarray:
    """Mean spin vector (<S_x>, <S_y>, <S_z>)."""
    r = _spin_density(rho)
    ops = collective_operators(SpinEnsemble(rho.basis.n_atoms))
    return np.array([_expect(r, o.data).real for o in (ops.sx, ops.sy, ops.sz)])


@dataclass(frozen=True)
class SqueezingReport:
    xi2: float
    optimal_angle: float
    min_variance: float
    msd: np.ndarray = field(repr=False)
    zero_mean_spin: bool = False


def _perp_frame(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.array([0.0, 0.0, 1.0])
    e1 = np.cross(z, n)
    if np.linalg.norm(e1) < 1e-12:
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def squeezing_parameter(rho: QuantumState) -> SqueezingReport:
    """Kitagawa-Ueda parameter ``4 min Var(S_perp) / N``.

    The minimum is the smaller eigenvalue of the symmetrized covariance of the
    two spin components orthogonal to the mean spin. ``optimal_angle`` is
    measured in that plane from ``e1 = z x n`` toward ``e2 = n x e1``, which
    for ``n = x`` is the angle from S_y toward S_z. States without a mean spin
    (|<S>| < 1e-9) are flagged and evaluated in the y-z plane.
    """
    r = _spin_density(rho)
    n_atoms = rho.basis.n_atoms
    ops = collective_operators(SpinEnsemble(n_atoms))
    s_ops = [ops.sx.data, ops.sy.data, ops.sz.data]
    mean = np.array([_expect(r, o).real for o in s_ops])
    length = np.linalg.norm(mean)
    zero = length < ZERO_SPIN
    n = np.array([1.0, 0.0, 0.0]) if zero else mean / length
    e1, e2 = _perp_frame(n)
    a = [sum(e[k] * s_ops[k] for k in range(3)) for e in (e1, e2)]
    am = [float(e @ mean) for e in (e1, e2)]
    cov = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            sym = 0.5 * (a[i] @ a[j] + a[j] @ a[i])
            cov[i, j] = _expect(r, sym).real - am[i] * am[j]
    lam, vec = np.linalg.eigh(cov)
    v = vec[:, 0]
    if abs(lam[1] - lam[0]) <= 1e-12 * max(1.0, abs(lam[1])):
        angle = 0.0
    else:
        angle = math.atan2(v[1], v[0]) % math.pi
        if math.isclose(angle, math.pi, abs_tol=1e-15):
            angle = 0.0
    min_var = float(lam[0])
    return SqueezingReport(4 * min_var / n_atoms, angle, min_var, n, bool(zero))


def transverse_variance(rho: QuantumState, theta) -> np.ndarray:
    """Variance of ``cos(theta) S_y + sin(theta) S_z`` (y-z plane) for an array of angles."""
    r = _spin_density(rho)
    ops = collective_operators(SpinEnsemble(rho.basis.n_atoms))
    sy, sz = ops.sy.data, ops.sz.data
    my, mz = _expect(r, sy).real, _expect(r, sz).real
    yy = _expect(r, sy @ sy).real - my * my
    zz = _expect(r, sz @ sz).real - mz * mz
    yz = _expect(r, sy @ sz + sz @ sy).real / 2 - my * mz
    th = np.asarray(theta, dtype=float)
    c, s = np.cos(th), np.sin(th)
    return c * c * yy + s * s * zz + 2 * c * s * yz


def fidelity(rho: QuantumState, target: QuantumState) -> float:
    """Overlap ``<psi_T| rho |psi_T>`` with a pure target."""
    if rho.basis != target.basis:
        raise BasisMismatch(f"state on {rho.basis}, target on {target.basis}")
    if not target.is_pure:
        raise ValueError("fidelity target must be a pure state")
    psi = target.data
    if rho.is_pure:
        f = abs(np.vdot(psi, rho.data)) ** 2
    else:
        f = np.vdot(psi, rho.data @ psi).real
    return float(max(f, 0.0))


def state_fidelity(rho: QuantumState, sigma: QuantumState) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`` between two states."""
    if rho.basis != sigma.basis:
        raise BasisMismatch(f"{rho.basis} vs {sigma.basis}")
    if sigma.is_pure:
        return fidelity(rho, sigma)
    if rho.is_pure:
        return fidelity(sigma, rho)
    lam, v = np.linalg.eigh(rho.data)
    sq = (v * np.sqrt(np.clip(lam, 0, None))) @ v.conj().T
    inner = sq @ sigma.data @ sq
    mu = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(mu, 0, None))) ** 2)


def purity(rho: QuantumState) -> float:
    if rho.is_pure:
        return 1.0
    return float(np.einsum("ij,ji->", rho.data, rho.data).real)


# --- sphere maps ----------------------------------------------------------------


def clebsch_gordan(j1: Fraction, m1: Fraction, j2: Fraction, m2: Fraction, j: Fraction, m: Fraction) -> float:
    """<j1 m1; j2 m2 | j m> from the Racah formula in exact rational arithmetic."""
    j1, m1, j2, m2, j, m = (Fraction(x) for x in (j1, m1, j2, m2, j, m))
    if m1 + m2 != m or abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    if j < abs(j1 - j2) or j > j1 + j2:
        return 0.0
    ints = [j1 + j2 - j, j1 - j2 + j, -j1 + j2 + j, j1 + m1, j1 - m1, j2 + m2, j2 - m2, j + m, j - m]
    if any(x.denominator != 1 for x in ints):
        return 0.0
    f = math.factorial

    def fi(x: Fraction) -> int:
        return f(int(x))

    pref = Fraction(
        int(2 * j + 1) * fi(j1 + j2 - j) * fi(j1 - j2 + j) * fi(-j1 + j2 + j),
        fi(j1 + j2 + j + 1),
    ) * (fi(j + m) * fi(j - m) * fi(j1 - m1) * fi(j1 + m1) * fi(j2 - m2) * fi(j2 + m2))
    total = Fraction(0)
    k_lo = int(max(0, j2 - j - m1, j1 + m2 - j))
    k_hi = int(min(j1 + j2 - j, j1 - m1, j2 + m2))
    for k in range(k_lo, k_hi + 1):
        den = (
            f(k)
            * fi(j1 + j2 - j - k)
            * fi(j1 - m1 - k)
            * fi(j2 + m2 - k)
            * fi(j - j2 + m1 + k)
            * fi(j - j1 - m2 + k)
        )
        total += Fraction((-1) ** k, den)
    if total == 0:
        return 0.0
    mag = math.sqrt(pref * total * total)
    return mag if total > 0 else -mag


@lru_cache(maxsize=32)
def tensor_operators(n_atoms: int) -> dict[tuple[int, int], np.ndarray]:
    """Irreducible tensor operators ``T_kq`` on the spin-S multiplet, S = N/2."""
    s = Fraction(n_atoms, 2)
    dim = n_atoms + 1
    out = {}
    for k in range(0, n_atoms + 1):
        for q in range(-k, k + 1):
            t = np.zeros((dim, dim))
            norm = math.sqrt((2 * k + 1) / (2 * s + 1))
            for a in range(dim):
                m = a - s
                mp = m - q
                b = int(mp + s)
                if 0 <= b < dim:
                    t[a, b] = norm * clebsch_gordan(s, mp, Fraction(k), Fraction(q), s, m)
            out[(k, q)] = t
    return out


@dataclass(frozen=True)
class SphereMap:
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    kind: Literal["husimi", "wigner"]
    n_atoms: int

    @property
    def normalization(self) -> float:
        """Target of ``integrate()``: 4 pi / (2S + 1) for both maps."""
        return 4 * math.pi / (self.n_atoms + 1)

    def integrate(self) -> float:
        """Integral over the sphere: Simpson in theta, periodic rectangle rule in phi."""
        ring = self.values.mean(axis=1) * 2 * math.pi
        return float(simpson(ring * np.sin(self.theta), x=self.theta))

    def argmax(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return float(self.theta[i]), float(self.phi[j])


def css_amplitudes_grid(n_atoms: int, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """<S,m|theta,phi> on a grid, shape (n_theta, n_phi, dim), same phase as ``css_state``."""
    s = n_atoms / 2
    k = np.arange(n_atoms + 1)
    m = k - s
    binom = np.sqrt(np.array([math.comb(n_atoms, int(x)) for x in k], dtype=float))
    c = np.cos(theta / 2)[:, None] ** (s + m)
    sn = np.sin(theta / 2)[:, None] ** (s - m)
    mag = binom * c * sn
    ph = np.exp(1j * phi[:, None] * (s - m))
    return mag[:, None, :] * ph[None, :, :]


def sphere_grid(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    if resolution < MIN_RESOLUTION:
        raise ResolutionTooLow(f"resolution {resolution} < {MIN_RESOLUTION} points per axis")
    theta = np.linspace(0.0, math.pi, resolution if resolution % 2 else resolution + 1)
    phi = np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)
    return theta, phi


def sphere_map(rho: QuantumState, kind: Literal["husimi", "wigner"] = "husimi", resolution: int = 64) -> SphereMap:
    """Husimi Q or spin Wigner function on a (theta, phi) grid.

    The theta grid always has an odd number of points so that the equator is
    sampled and Simpson's rule applies.
    """
    r = _spin_density(rho)
    n_atoms = rho.basis.n_atoms
    theta, phi = sphere_grid(resolution)
    if kind == "husimi":
        amp = css_amplitudes_grid(n_atoms, theta, phi)
        vals = np.einsum("tpi,ij,tpj->tp", amp.conj(), r, amp).real
    elif kind == "wigner":
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        vals = np.zeros_like(tt)
        for (k, q), t in tensor_operators(n_atoms).items():
            coeff = np.einsum("ij,ij->", r, t.conj())  # Tr(rho T^dag) with real T
            if abs(coeff) < 1e-15:
                continue
            vals = vals + (coeff * sph_harm_y(k, q, tt, pp)).real
        vals *= math.sqrt(4 * math.pi / (n_atoms + 1))
    else:
        raise ValueError(f"unknown sphere map kind {kind!r}")
    return SphereMap(theta, phi, vals, kind, n_atoms)
