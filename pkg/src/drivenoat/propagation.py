"""Time evolution: cached-eigensystem unitary propagation (static and
piecewise-constant drives) and Lindblad master-equation integration."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.linalg import expm

from drivenoat.errors import BasisMismatch, NumericalInvariantError, PositivityViolation
from drivenoat.model import DriveWaveform, ModelParams, drive_value, h_eff_driven, h_ideal_oat, h_spin_driven
from drivenoat.numerics import TOL, OperatorMatrix, QuantumState, hermiticity_error, herm_eig
from drivenoat.spin import SpinOperators

log = logging.getLogger(__name__)

LINDBLAD_TRACE_TOL = 1e-10
LINDBLAD_HERM_TOL = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("time grid needs at least one sample")
        if np.any(np.diff(s) <= 0):
            raise ValueError("samples must be strictly increasing")
        if s[0] != self.t_start or s[-1] > self.t_end or self.t_end < self.t_start:
            raise ValueError("samples must start at t_start and stay within [t_start, t_end]")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def uniform(cls, t_end: float, n: int, t_start: float = 0.0) -> TimeGrid:
        return cls(t_start, t_end, np.linspace(t_start, t_end, n))

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> TimeGrid:
        s = np.asarray(samples, dtype=float)
        return cls(float(s[0]), float(s[-1]), s)

    def __len__(self) -> int:
        return self.samples.size


class _Eigen:
    """Eigensystem of a Hermitian generator, applied to vectors or densities."""

    def __init__(self, h: OperatorMatrix):
        lam, v = herm_eig(h)
        self.lam = lam
        self.v = v.data
        self.vd = self.v.conj().T

    def to_eig(self, x: np.ndarray) -> np.ndarray:
        return self.vd @ x if x.ndim == 1 else self.vd @ x @ self.v

    def from_eig(self, y: np.ndarray) -> np.ndarray:
        return self.v @ y if y.ndim == 1 else self.v @ y @ self.vd

    def phase(self, y: np.ndarray, dt: float) -> np.ndarray:
        p = np.exp(-1j * self.lam * dt)
        if y.ndim == 1:
            return p * y
        return (p[:, None] * y) * p.conj()[None, :]

    def step(self, x: np.ndarray, dt: float) -> np.ndarray:
        return self.from_eig(self.phase(self.to_eig(x), dt))


def _check_unitary_output(x: np.ndarray) -> None:
    if x.ndim == 1:
        err = abs(np.linalg.norm(x) - 1.0)
    else:
        err = abs(np.trace(x).real - 1.0)
    if err > TOL.norm:
        raise NumericalInvariantError(f"norm/trace drift {err:.3e} during unitary propagation")


def _wrap(x: np.ndarray, basis) -> QuantumState:
    return QuantumState(x, basis, validate=False)


def evolve_unitary_static(h: OperatorMatrix, psi0: QuantumState, grid: TimeGrid) -> list[QuantumState]:
    """States ``exp(-i H (t_k - t_start)) psi0`` at every sample; densities are conjugated."""
    if h.basis != psi0.basis:
        raise BasisMismatch(f"Hamiltonian on {h.basis}, state on {psi0.basis}")
    eig = _Eigen(h)
    y0 = eig.to_eig(psi0.data)
    out = []
    for t in grid.samples:
        x = psi0.data if t == grid.t_start else eig.from_eig(eig.phase(y0, t - grid.t_start))
        _check_unitary_output(x)
        out.append(_wrap(x, psi0.basis))
    return out


def _segment_boundaries(waveform: DriveWaveform | None, grid: TimeGrid) -> np.ndarray:
    pts = [grid.samples]
    if waveform is not None:
        pts.append(waveform.edges(grid.t_end))
    b = np.unique(np.concatenate(pts))
    return b[(b >= grid.t_start) & (b <= grid.samples[-1])]


def evolve_piecewise(
    hamiltonian_for: Callable[[float], OperatorMatrix],
    waveform: DriveWaveform,
    psi0: QuantumState,
    grid: TimeGrid,
) -> list[QuantumState]:
    """Time-ordered propagation under a drive that is constant between switching times.

    Segment boundaries are the union of sample times and pulse edges, so every
    segment sees a single drive value; one eigensystem is kept per distinct value.
    """
    bounds = _segment_boundaries(waveform, grid)
    cache: dict[float, _Eigen] = {}
    sample_set = {float(t): i for i, t in enumerate(grid.samples)}
    out: list[QuantumState | None] = [None] * len(grid)
    x = psi0.data
    if float(bounds[0]) in sample_set:
        out[sample_set[float(bounds[0])]] = _wrap(x, psi0.basis)
    for t0, t1 in zip(bounds[:-1], bounds[1:]):
        value = drive_value(waveform, 0.5 * (t0 + t1))
        eig = cache.get(value)
        if eig is None:
            h = hamiltonian_for(value)
            if h.basis != psi0.basis:
                raise BasisMismatch(f"Hamiltonian on {h.basis}, state on {psi0.basis}")
            eig = cache[value] = _Eigen(h)
        x = eig.step(x, t1 - t0)
        idx = sample_set.get(float(t1))
        if idx is not None:
            _check_unitary_output(x)
            out[idx] = _wrap(x, psi0.basis)
    return out


def evolve_unitary_pulsed(
    params: ModelParams,
    waveform: DriveWaveform,
    psi0: QuantumState,
    grid: TimeGrid,
) -> list[QuantumState]:
    """Evolution under the cavity-driven dispersive Hamiltonian with drive ``waveform``.

    Composite states use the full Stark + OAT + drive Hamiltonian; spin-only
    states use the drive + OAT part.
    """
    from drivenoat.boson import BosonSpace, ladder_operators
    from drivenoat.spin import SpinEnsemble, collective_operators

    spin = collective_operators(SpinEnsemble(params.N))
    if psi0.basis.kind == "composite":
        if psi0.basis.n_atoms != params.N:
            raise BasisMismatch(f"state on {psi0.basis}, params have N={params.N}")
        boson = ladder_operators(BosonSpace(psi0.basis.n_max))
        return evolve_piecewise(lambda v: h_eff_driven(params, v, spin, boson), waveform, psi0, grid)
    if psi0.basis.kind == "spin":
        return evolve_piecewise(lambda v: h_spin_driven(params, v, spin), waveform, psi0, grid)
    raise BasisMismatch(f"cannot drive a state on {psi0.basis}")


# --- Lindblad -----------------------------------------------------------------


@dataclass(frozen=True)
class LindbladSpec:
    """Generator ``-i[H, rho] + sum_k rate_k (A rho A^dag - {A^dag A, rho}/2)``."""

    hamiltonian: OperatorMatrix
    channels: tuple[tuple[OperatorMatrix, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple((op, float(rate)) for op, rate in self.channels))
        for op, rate in self.channels:
            if op.basis != self.hamiltonian.basis:
                raise BasisMismatch(f"jump operator on {op.basis}, Hamiltonian on {self.hamiltonian.basis}")
            if rate < 0:
                raise ValueError(f"negative rate {rate}")

    @property
    def basis(self):
        return self.hamiltonian.basis


def liouvillian(spec: LindbladSpec) -> np.ndarray:
    """Superoperator acting on row-major ``rho.ravel()``.

    Uses ``vec(A X B) = (A ⊗ B^T) vec(X)`` for the row-major convention.
    """
    h = spec.hamiltonian.data
    d = h.shape[0]
    eye = np.eye(d)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in spec.channels:
        if rate == 0:
            continue
        a = op.data
        ada = a.conj().T @ a
        sup = sup + rate * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
    return sup


def lindblad_rhs(spec: LindbladSpec, rho: np.ndarray) -> np.ndarray:
    h = spec.hamiltonian.data
    out = -1j * (h @ rho - rho @ h)
    for op, rate in spec.channels:
        if rate:
            a = op.data
            ad = a.conj().T
            ada = ad @ a
            out = out + rate * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
    return out


def check_density(rho: np.ndarray, t: float | None = None) -> None:
    """Trace, Hermiticity and eigenvalue-floor checks for integrator output."""
    where = f" at t={t:.6g}" if t is not None else ""
    terr = abs(np.trace(rho) - 1.0)
    if terr > LINDBLAD_TRACE_TOL:
        raise NumericalInvariantError(f"trace drift {terr:.3e}{where}")
    herr = hermiticity_error(rho)
    if herr > LINDBLAD_HERM_TOL:
        raise NumericalInvariantError(f"Hermiticity error {herr:.3e}{where}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < TOL.eig_floor:
        raise PositivityViolation(f"minimum eigenvalue {lam:.3e}{where}", worst=float(lam))


def _as_density(rho0: QuantumState, basis) -> np.ndarray:
    if rho0.basis != basis:
        raise BasisMismatch(f"state on {rho0.basis}, generator on {basis}")
    return rho0.density().astype(complex)


class _Propagators:
    """``expm(L dt)`` cache keyed by step length."""

    def __init__(self, sup: np.ndarray):
        self.sup = sup
        self.cache: dict[float, np.ndarray] = {}

    def __call__(self, dt: float) -> np.ndarray:
        key = round(dt, 14)
        p = self.cache.get(key)
        if p is None:
            p = self.cache[key] = expm(self.sup * dt)
        return p


def evolve_lindblad(spec: LindbladSpec, rho0: QuantumState, grid: TimeGrid) -> list[QuantumState]:
    """Integrate a time-independent master equation by exponentiating its Liouvillian."""
    rho = _as_density(rho0, spec.basis)
    d = rho.shape[0]
    prop = _Propagators(liouvillian(spec))
    out = []
    t_prev = grid.t_start
    vec = rho.ravel()
    for t in grid.samples:
        if t > t_prev:
            vec = prop(t - t_prev) @ vec
        r = vec.reshape(d, d)
        check_density(r, t)
        out.append(_wrap(r.copy(), spec.basis))
        t_prev = t
    return out


def evolve_lindblad_piecewise(
    spec_for: Callable[[float], LindbladSpec],
    waveform: DriveWaveform,
    rho0: QuantumState,
    grid: TimeGrid,
) -> list[QuantumState]:
    """Master equation whose generator depends on a piecewise-constant drive."""
    bounds = _segment_boundaries(waveform, grid)
    gens: dict[float, _Propagators] = {}
    sample_set = {float(t): i for i, t in enumerate(grid.samples)}
    out: list[QuantumState | None] = [None] * len(grid)
    first = spec_for(drive_value(waveform, grid.t_start))
    rho = _as_density(rho0, first.basis)
    d = rho.shape[0]
    vec = rho.ravel()
    if float(bounds[0]) in sample_set:
        out[sample_set[float(bounds[0])]] = _wrap(rho.copy(), first.basis)
    for t0, t1 in zip(bounds[:-1], bounds[1:]):
        value = drive_value(waveform, 0.5 * (t0 + t1))
        prop = gens.get(value)
        if prop is None:
            prop = gens[value] = _Propagators(liouvillian(spec_for(value)))
        vec = prop(t1 - t0) @ vec
        idx = sample_set.get(float(t1))
        if idx is not None:
            r = vec.reshape(d, d)
            check_density(r, t1)
            out[idx] = _wrap(r.copy(), first.basis)
    return out


def _rk4_step(spec_at: Callable[[float], LindbladSpec], t: float, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = lindblad_rhs(spec_at(t), rho)
    k2 = lindblad_rhs(spec_at(t + h / 2), rho + h / 2 * k1)
    k3 = lindblad_rhs(spec_at(t + h / 2), rho + h / 2 * k2)
    k4 = lindblad_rhs(spec_at(t + h), rho + h * k3)
    return rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_interval(spec_at, t0: float, t1: float, rho: np.ndarray, steps: int) -> np.ndarray:
    h = (t1 - t0) / steps
    for i in range(steps):
        rho = _rk4_step(spec_at, t0 + i * h, rho, h)
    return rho


def evolve_lindblad_rk4(
    spec_at: Callable[[float], LindbladSpec],
    rho0: QuantumState,
    grid: TimeGrid,
    tol: float = 1e-8,
    initial_steps: int = 4,
    max_halvings: int = 14,
) -> list[QuantumState]:
    """Fourth-order Runge-Kutta for smoothly time-dependent generators.

    Each sample interval is integrated with n and 2n steps, doubling n until the
    two results differ by less than ``tol`` (max entry).
    """
    rho = _as_density(rho0, spec_at(grid.t_start).basis)
    out = []
    t_prev = grid.t_start
    for t in grid.samples:
        if t > t_prev:
            n = initial_steps
            coarse = _rk4_interval(spec_at, t_prev, t, rho, n)
            for _ in range(max_halvings):
                fine = _rk4_interval(spec_at, t_prev, t, rho, 2 * n)
                if np.max(np.abs(fine - coarse)) < tol:
                    break
                coarse, n = fine, 2 * n
            else:
                raise NumericalInvariantError(f"RK4 step halving did not converge on [{t_prev}, {t}]")
            rho = fine
        check_density(rho, t)
        out.append(_wrap(rho.copy(), rho0.basis))
        t_prev = t
    return out


LindbladKind = Literal["lab_frame", "constant_frame", "constant_frame_doubled", "pulsed_frame"]


def lindblad_builders(
    kind: LindbladKind,
    params: ModelParams,
    spin: SpinOperators,
    drive: float = 0.0,
) -> LindbladSpec:
    """Spin-only master equations for cavity-mediated collective decay.

    ``lab_frame``: ``drive S_x + chi S_z^2`` with ``S_-`` decay at Gamma.
    ``constant_frame``: constant-drive frame, ``-(chi/2) S_x^2`` with triaxial dephasing
    (Gamma on S_x, Gamma/2 on S_y and S_z); ``constant_frame_doubled`` doubles the twist.
    ``pulsed_frame``: pulse-train frame, ``chi S_y^2`` with ``S_-`` and ``S_+`` at Gamma/2.
    """
    g = params.Gamma
    chi = params.chi
    if g < 0:
        raise ValueError("Gamma must be non-negative")
    if kind == "lab_frame":
        return LindbladSpec(h_spin_driven(params, drive, spin), ((spin.s_minus, g),))
    if kind in ("constant_frame", "constant_frame_doubled"):
        strength = -chi / 2 if kind == "constant_frame" else -chi
        return LindbladSpec(
            h_ideal_oat("x", strength, spin),
            ((spin.sx, g), (spin.sy, g / 2), (spin.sz, g / 2)),
        )
    if kind == "pulsed_frame":
        return LindbladSpec(h_ideal_oat("y", chi, spin), ((spin.s_minus, g / 2), (spin.s_plus, g / 2)))
    raise ValueError(f"unknown master-equation kind {kind!r}")
