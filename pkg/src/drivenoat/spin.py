"""Collective spin of N two-level atoms in the symmetric (Dicke) subspace.

Basis vectors |S, m> are stored with m ascending from -S to S, so index
``k`` corresponds to ``m = k - S``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, pi
from typing import Literal, NamedTuple

import numpy as np

from drivenoat.errors import BasisMismatch
from drivenoat.numerics import Basis, OperatorMatrix, QuantumState, herm_eig

Axis = Literal["x", "y", "z"]


@dataclass(frozen=True)
class SpinEnsemble:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"atom number must be a positive integer, got {self.N}")

    @property
    def S(self) -> float:
        return self.N / 2

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def basis(self) -> Basis:
        return Basis.spin(self.N)

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.dim) - self.S


@dataclass(frozen=True)
class CssSpec:
    """Direction of a coherent spin state: polar angle from +z, azimuth from +x."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not 0.0 <= self.phi < 2 * pi:
            raise ValueError(f"phi must lie in [0, 2pi), got {self.phi}")


class SpinOperators(NamedTuple):
    sx: OperatorMatrix
    sy: OperatorMatrix
    sz: OperatorMatrix
    s_plus: OperatorMatrix
    s_minus: OperatorMatrix

    @property
    def basis(self) -> Basis:
        return self.sz.basis

    def axis(self, name: Axis) -> OperatorMatrix:
        try:
            return {"x": self.sx, "y": self.sy, "z": self.sz}[name]
        except KeyError:
            raise ValueError(f"axis must be one of x, y, z; got {name!r}") from None


def collective_operators(ens: SpinEnsemble) -> SpinOperators:
    return _collective_operators(ens.N)


@lru_cache(maxsize=64)
def _collective_operators(n_atoms: int) -> SpinOperators:
    ens = SpinEnsemble(n_atoms)
    s, m = ens.S, ens.m
    basis = ens.basis
    # S+|m> = sqrt(S(S+1) - m(m+1)) |m+1>, i.e. entries just below the diagonal
    sp = np.diag(np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1)), k=-1).astype(complex)
    sm = sp.conj().T
    sx = 0.5 * (sp + sm)
    sy = (sp - sm) / 2j
    sz = np.diag(m).astype(complex)
    return SpinOperators(
        OperatorMatrix(sx, basis, hermitian=True),
        OperatorMatrix(sy, basis, hermitian=True),
        OperatorMatrix(sz, basis, hermitian=True),
        OperatorMatrix(sp, basis),
        OperatorMatrix(sm, basis),
    )


@lru_cache(maxsize=64)
def _axis_eigensystem(n_atoms: int, axis: str) -> tuple[np.ndarray, np.ndarray]:
    ops = _collective_operators(n_atoms)
    lam, v = herm_eig(ops.axis(axis))
    return lam, v.data


def rotation_matrix(ens: SpinEnsemble, axis: Axis, angle: float) -> np.ndarray:
    """Raw matrix of ``exp(-i angle S_axis)``."""
    if axis == "z":
        return np.diag(np.exp(-1j * angle * ens.m))
    lam, v = _axis_eigensystem(ens.N, axis)
    return (v * np.exp(-1j * angle * lam)) @ v.conj().T


def rotate(state: QuantumState, axis: Axis, angle: float) -> QuantumState:
    """Apply ``exp(-i angle S_axis)`` to a spin state (vector or density)."""
    if state.basis.kind != "spin":
        raise BasisMismatch(f"rotate needs a spin state, got {state.basis}")
    u = rotation_matrix(SpinEnsemble(state.basis.n_atoms), axis, angle)
    if state.is_pure:
        return QuantumState(u @ state.data, state.basis)
    return QuantumState(u @ state.data @ u.conj().T, state.basis, validate=False)


def css_state(ens: SpinEnsemble, spec: CssSpec) -> QuantumState:
    """Coherent spin state ``exp(-i theta S_n)|S,S>`` with ``n = (-sin phi, cos phi, 0)``."""
    ops = collective_operators(ens)
    gen = -np.sin(spec.phi) * ops.sx + np.cos(spec.phi) * ops.sy
    lam, v = herm_eig(gen)
    north = np.zeros(ens.dim, dtype=complex)
    north[-1] = 1.0
    vd = v.data
    psi = (vd * np.exp(-1j * spec.theta * lam)) @ (vd.conj().T @ north)
    return QuantumState(psi, ens.basis)


def equatorial_css_amplitudes(ens: SpinEnsemble) -> np.ndarray:
    """Real amplitudes ``2^-S sqrt(binom(2S, S+m))`` of the x-polarized CSS."""
    n = ens.N
    return np.sqrt(np.array([comb(n, k) for k in range(n + 1)], dtype=float) / 2.0**n)


def oat_state(ens: SpinEnsemble, mu: float, phi: float = 0.0) -> QuantumState:
    """One-axis-twisted state ``exp(i phi Sz) exp(-i (mu/2) Sz^2) |pi/2, 0>``.

    ``mu`` is the twisting phase ``2 chi t`` so that ``mu = pi`` gives the GHZ
    state and ``phi = n mu`` is the Stark rotation picked up with ``n`` photons.
    """
    m = ens.m
    amps = equatorial_css_amplitudes(ens) * np.exp(1j * phi * m - 0.5j * mu * m**2)
    return QuantumState(amps, ens.basis)


def ghz_state(ens: SpinEnsemble) -> QuantumState:
    """Equal superposition of the equatorial CSS at ``Phi = -N pi/2`` and ``Phi + pi``.

    The equatorial states are z-rotations of ``|pi/2, 0>``. Their relative
    phase is ``-i`` for N = 2 (mod 4) and ``(-i)**(N-1)`` in general, which
    makes the result coincide with ``oat_state(ens, pi)`` for every N.
    """
    base = equatorial_css_amplitudes(ens)
    m = ens.m
    big_phi = -ens.N * pi / 2
    rel = (-1j) ** ((ens.N - 2) % 4 + 1)
    psi = base * (np.exp(-1j * big_phi * m) + rel * np.exp(-1j * (big_phi + pi) * m))
    return QuantumState(psi / np.linalg.norm(psi), ens.basis)
