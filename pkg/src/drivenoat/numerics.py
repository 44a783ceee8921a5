"""Dense linear-algebra core: tagged operators and states, Hermitian
exponentials, Kronecker products and the partial trace over the cavity mode.

Composite spaces are always ordered spin ⊗ boson. The basis tag carried by
every matrix and state is checked whenever two objects are combined, so an
index-order mistake surfaces as an exception instead of a wrong number.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from drivenoat.errors import (
    BasisMismatch,
    BasisOrderViolation,
    DimensionMismatch,
    NotHermitian,
    NumericalInvariantError,
    PositivityViolation,
)

__all__ = [
    "TOL",
    "Tolerances",
    "Basis",
    "OperatorMatrix",
    "QuantumState",
    "herm_eig",
    "expm_hermitian_generator",
    "kron",
    "partial_trace_boson",
    "identity",
    "kron_states",
    "hermiticity_error",
]


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    norm: float = 1e-10
    trace: float = 1e-10
    eig_floor: float = -1e-8
    unitarity: float = 1e-10


TOL = Tolerances()


@dataclass(frozen=True)
class Basis:
    """Basis tag: ``spin(N)``, ``boson(n_max)`` or ``composite(N, n_max)``."""

    kind: Literal["spin", "boson", "composite"]
    n_atoms: int | None = None
    n_max: int | None = None

    def __post_init__(self):
        if self.kind in ("spin", "composite") and (self.n_atoms is None or self.n_atoms < 1):
            raise ValueError(f"{self.kind} basis needs n_atoms >= 1")
        if self.kind in ("boson", "composite") and (self.n_max is None or self.n_max < 0):
            raise ValueError(f"{self.kind} basis needs n_max >= 0")
        if self.kind not in ("spin", "boson", "composite"):
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @classmethod
    def spin(cls, n_atoms: int) -> Basis:
        return cls("spin", n_atoms=int(n_atoms))

    @classmethod
    def boson(cls, n_max: int) -> Basis:
        return cls("boson", n_max=int(n_max))

    @classmethod
    def composite(cls, n_atoms: int, n_max: int) -> Basis:
        return cls("composite", n_atoms=int(n_atoms), n_max=int(n_max))

    @property
    def dim(self) -> int:
        if self.kind == "spin":
            return self.n_atoms + 1
        if self.kind == "boson":
            return self.n_max + 1
        return (self.n_atoms + 1) * (self.n_max + 1)

    @property
    def factor_dims(self) -> tuple[int, int]:
        if self.kind != "composite":
            raise BasisMismatch(f"{self} has no spin/boson factors")
        return self.n_atoms + 1, self.n_max + 1

    def __str__(self) -> str:
        if self.kind == "spin":
            return f"spin({self.n_atoms})"
        if self.kind == "boson":
            return f"boson({self.n_max})"
        return f"composite({self.n_atoms}, {self.n_max})"


def _check_same_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise BasisMismatch(f"basis {a} does not match {b}")


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex square matrix with a basis tag.

    Supports ``+``, ``-``, scalar ``*`` and ``@`` between operators on the
    same basis; ``@`` with a bare ndarray acts on the raw data.
    """

    data: np.ndarray
    basis: Basis
    hermitian: bool = False

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        d = self.basis.dim
        if data.shape != (d, d):
            raise DimensionMismatch(f"data shape {data.shape} does not match {self.basis} (dim {d})")
        if self.hermitian:
            dev = hermiticity_error(data)
            if dev > TOL.hermitian:
                raise NotHermitian(f"flagged Hermitian but max|M - M^dag| = {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def dag(self) -> OperatorMatrix:
        return OperatorMatrix(self.data.conj().T, self.basis, self.hermitian)

    def is_hermitian(self, tol: float = TOL.hermitian) -> bool:
        return hermiticity_error(self.data) <= tol

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, OperatorMatrix):
            _check_same_basis(self.basis, other.basis)
            return other.data
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return OperatorMatrix(self.data + o, self.basis, self.hermitian and other.hermitian)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return OperatorMatrix(self.data - o, self.basis, self.hermitian and other.hermitian)

    def __neg__(self):
        return OperatorMatrix(-self.data, self.basis, self.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        herm = self.hermitian and np.isreal(scalar)
        return OperatorMatrix(self.data * scalar, self.basis, bool(herm))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_same_basis(self.basis, other.basis)
            return OperatorMatrix(self.data @ other.data, self.basis)
        return self.data @ np.asarray(other)

    def __repr__(self) -> str:
        return f"OperatorMatrix({self.basis}, hermitian={self.hermitian})"


def hermiticity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Pure state vector or density matrix over a tagged basis."""

    data: np.ndarray
    basis: Basis
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        d = self.basis.dim
        if data.ndim == 1:
            if data.shape != (d,):
                raise DimensionMismatch(f"vector length {data.shape[0]} does not match {self.basis}")
        elif data.shape != (d, d):
            raise DimensionMismatch(f"density shape {data.shape} does not match {self.basis}")
        if self.validate:
            self.check()

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    @property
    def representation(self) -> str:
        return "vector" if self.is_pure else "density"

    @property
    def dim(self) -> int:
        return self.basis.dim

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_density(self) -> QuantumState:
        if not self.is_pure:
            return self
        return QuantumState(self.density(), self.basis, validate=False)

    def check(self, positivity: bool = False) -> None:
        """Raise if the state violates normalization/Hermiticity bounds.

        The eigenvalue floor is only tested when ``positivity`` is set since
        it costs a full diagonalization.
        """
        if self.is_pure:
            err = abs(np.linalg.norm(self.data) - 1.0)
            if err > TOL.norm:
                raise NumericalInvariantError(f"state vector norm deviates from 1 by {err:.3e}")
            return
        err = abs(np.trace(self.data) - 1.0)
        if err > TOL.trace:
            raise NumericalInvariantError(f"density trace deviates from 1 by {err:.3e}")
        herr = hermiticity_error(self.data)
        if herr > TOL.hermitian:
            raise NotHermitian(f"density matrix non-Hermitian by {herr:.3e}")
        if positivity:
            lam = np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0]
            if lam < TOL.eig_floor:
                raise PositivityViolation(f"minimum eigenvalue {lam:.3e}", worst=float(lam))

    def __repr__(self) -> str:
        return f"QuantumState({self.representation}, {self.basis})"


def identity(basis: Basis) -> OperatorMatrix:
    return OperatorMatrix(np.eye(basis.dim), basis, hermitian=True)


def herm_eig(m: OperatorMatrix, tol: float = TOL.hermitian) -> tuple[np.ndarray, OperatorMatrix]:
    """Eigen-decomposition ``M = V diag(lam) V^dag`` with ascending ``lam``."""
    if not isinstance(m, OperatorMatrix):
        raise TypeError("herm_eig expects an OperatorMatrix")
    scale = max(1.0, float(np.max(np.abs(m.data)))) if m.data.size else 1.0
    dev = hermiticity_error(m.data)
    if dev > tol * scale:
        raise NotHermitian(f"max|M - M^dag| = {dev:.3e}")
    lam, vecs = np.linalg.eigh(0.5 * (m.data + m.data.conj().T))
    return lam, OperatorMatrix(vecs, m.basis)


def _phases(lam: np.ndarray, t: float) -> np.ndarray:
    return np.exp(-1j * lam * t)


def expm_hermitian_generator(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """``exp(-i H t)`` from the Hermitian eigensystem of ``H``."""
    lam, v = herm_eig(h)
    vd = v.data
    return OperatorMatrix((vd * _phases(lam, t)) @ vd.conj().T, h.basis)


def kron(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """``A ⊗ B`` with A on the spin factor and B on the boson factor."""
    if a.basis.kind == "boson" and b.basis.kind == "spin":
        raise BasisOrderViolation("factor order is spin ⊗ boson; arguments are reversed")
    if a.basis.kind != "spin" or b.basis.kind != "boson":
        raise BasisOrderViolation(f"kron needs (spin, boson), got ({a.basis}, {b.basis})")
    basis = Basis.composite(a.basis.n_atoms, b.basis.n_max)
    return OperatorMatrix(np.kron(a.data, b.data), basis, a.hermitian and b.hermitian)


def kron_states(spin: QuantumState, boson: QuantumState) -> QuantumState:
    if spin.basis.kind != "spin" or boson.basis.kind != "boson":
        raise BasisOrderViolation("kron_states needs (spin, boson) states")
    basis = Basis.composite(spin.basis.n_atoms, boson.basis.n_max)
    if spin.is_pure and boson.is_pure:
        return QuantumState(np.kron(spin.data, boson.data), basis)
    return QuantumState(np.kron(spin.density(), boson.density()), basis)


def partial_trace_boson(rho: QuantumState) -> QuantumState:
    """Trace out the cavity mode of a composite state; vectors are promoted."""
    if rho.basis.kind != "composite":
        raise BasisMismatch(f"partial trace needs a composite state, got {rho.basis}")
    ds, db = rho.basis.factor_dims
    if rho.is_pure:
        psi = rho.data.reshape(ds, db)
        red = psi @ psi.conj().T
    else:
        red = np.einsum("inkn->ik", rho.data.reshape(ds, db, ds, db))
    return QuantumState(red, Basis.spin(rho.basis.n_atoms), validate=False)
