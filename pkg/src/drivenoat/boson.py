"""Truncated Fock space of the cavity mode and the bosonic input states."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import gammaln

from drivenoat.errors import TruncationInsufficient
from drivenoat.numerics import Basis, OperatorMatrix, QuantumState

log = logging.getLogger(__name__)

TAIL_TARGET = 1e-12
RETAINED_MIN = 1.0 - 1e-10
_SEARCH_LIMIT = 5000


@dataclass(frozen=True)
class BosonSpace:
    n_max: int

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be a non-negative integer, got {self.n_max}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def basis(self) -> Basis:
        return Basis.boson(self.n_max)


@dataclass(frozen=True)
class BosonInput:
    """Input state of the cavity mode.

    ``kind`` selects the family and ``value`` its parameter: the photon number
    for ``fock``, the amplitude alpha (complex allowed) for ``coherent``, the
    mean occupation for ``thermal`` and the squeezing r for ``squeezed``.
    """

    kind: Literal["fock", "coherent", "thermal", "squeezed"]
    value: complex = 0.0

    def __post_init__(self):
        if self.kind == "fock":
            if int(np.real(self.value)) != self.value or np.real(self.value) < 0:
                raise ValueError(f"fock index must be a non-negative integer, got {self.value}")
        elif self.kind in ("thermal", "squeezed"):
            if np.imag(self.value) != 0 or np.real(self.value) < 0:
                raise ValueError(f"{self.kind} parameter must be real and >= 0, got {self.value}")
        elif self.kind != "coherent":
            raise ValueError(f"unknown boson input kind {self.kind!r}")

    @classmethod
    def fock(cls, n0: int) -> BosonInput:
        return cls("fock", int(n0))

    @classmethod
    def coherent(cls, alpha: complex) -> BosonInput:
        return cls("coherent", alpha)

    @classmethod
    def thermal(cls, nbar: float) -> BosonInput:
        return cls("thermal", float(nbar))

    @classmethod
    def squeezed(cls, r: float) -> BosonInput:
        return cls("squeezed", float(r))

    @property
    def is_mixed(self) -> bool:
        return self.kind == "thermal"

    @property
    def mean_photons(self) -> float:
        v = self.value
        if self.kind == "fock":
            return float(np.real(v))
        if self.kind == "coherent":
            return float(abs(v) ** 2)
        if self.kind == "thermal":
            return float(np.real(v))
        return float(np.sinh(np.real(v)) ** 2)


class BosonOperators(NamedTuple):
    a: OperatorMatrix
    a_dag: OperatorMatrix
    number: OperatorMatrix

    @property
    def basis(self) -> Basis:
        return self.number.basis


def ladder_operators(space: BosonSpace) -> BosonOperators:
    return _ladder_operators(space.n_max)


@lru_cache(maxsize=64)
def _ladder_operators(n_max: int) -> BosonOperators:
    basis = Basis.boson(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1).astype(complex)
    return BosonOperators(
        OperatorMatrix(a, basis),
        OperatorMatrix(a.conj().T, basis),
        OperatorMatrix(np.diag(np.arange(n_max + 1, dtype=float)), basis, hermitian=True),
    )


def photon_distribution(inp: BosonInput, n_max: int) -> np.ndarray:
    """Untruncated probabilities |c_n|^2 for n = 0..n_max (not renormalized)."""
    n = np.arange(n_max + 1)
    v = inp.value
    if inp.kind == "fock":
        p = np.zeros(n_max + 1)
        n0 = int(np.real(v))
        if n0 <= n_max:
            p[n0] = 1.0
        return p
    if inp.kind == "coherent":
        a2 = abs(v) ** 2
        if a2 == 0:
            return (n == 0).astype(float)
        return np.exp(-a2 + n * np.log(a2) - gammaln(n + 1))
    if inp.kind == "thermal":
        nbar = float(np.real(v))
        if nbar == 0:
            return (n == 0).astype(float)
        return np.exp(n * np.log(nbar) - (n + 1) * np.log1p(nbar))
    r = float(np.real(v))
    p = np.zeros(n_max + 1)
    if r == 0:
        p[0] = 1.0
        return p
    k = np.arange(0, n_max // 2 + 1)
    # |c_2k|^2 = tanh^2k(r) (2k)! / (4^k (k!)^2 cosh r)
    logp = (
        2 * k * np.log(np.tanh(r))
        + gammaln(2 * k + 1)
        - 2 * gammaln(k + 1)
        - k * np.log(4.0)
        - np.log(np.cosh(r))
    )
    p[2 * k] = np.exp(logp)
    return p


def _amplitudes(inp: BosonInput, n_max: int) -> np.ndarray:
    n = np.arange(n_max + 1)
    p = photon_distribution(inp, n_max)
    if inp.kind == "coherent":
        phase = np.exp(1j * n * np.angle(inp.value)) if inp.value != 0 else np.ones(n_max + 1)
        return np.sqrt(p) * phase
    if inp.kind == "squeezed":
        # squeezed vacuum along x: c_2k carries the sign (-1)^k
        return np.sqrt(p) * np.where(n % 4 == 2, -1.0, 1.0)
    return np.sqrt(p).astype(complex)


def input_state(space: BosonSpace, inp: BosonInput) -> QuantumState:
    """State of the mode truncated to ``space`` and renormalized."""
    p = photon_distribution(inp, space.n_max)
    retained = float(p.sum())
    if retained < RETAINED_MIN:
        raise TruncationInsufficient(
            f"n_max={space.n_max} keeps only {retained:.12f} of the {inp.kind} distribution"
        )
    if retained < 1.0:
        log.debug("truncation deficit %.3e for %s input renormalized", 1.0 - retained, inp.kind)
    if inp.kind == "thermal":
        return QuantumState(np.diag(p / retained), space.basis)
    c = _amplitudes(inp, space.n_max)
    return QuantumState(c / np.linalg.norm(c), space.basis)


def truncation_recommendation(inp: BosonInput) -> int:
    """Smallest n_max whose omitted photon-number tail is below 1e-12."""
    if inp.kind == "fock":
        return int(np.real(inp.value))
    if inp.mean_photons == 0:
        return 0
    if inp.kind == "coherent":
        a = abs(inp.value)
        limit = int(np.ceil(a**2 + 8 * a + 10))
    else:
        limit = 64
    while True:
        p = photon_distribution(inp, limit)
        tail = 1.0 - np.cumsum(p)
        ok = np.nonzero(tail < TAIL_TARGET)[0]
        if ok.size:
            return int(ok[0])
        if limit >= _SEARCH_LIMIT:
            raise TruncationInsufficient(f"no truncation below {_SEARCH_LIMIT} for {inp}")
        limit *= 2
