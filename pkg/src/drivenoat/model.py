"""Hamiltonians of the (driven) Tavis-Cummings model and the cavity drive.

Units: the twisting rate chi is the unit of frequency, so times are in 1/chi
and all rates (drive amplitudes, decay) in chi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from drivenoat.boson import BosonOperators
from drivenoat.errors import BasisMismatch, ConfigurationViolation
from drivenoat.numerics import Basis, OperatorMatrix
from drivenoat.spin import Axis, SpinOperators

_REL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Physical constants in units of chi.

    ``Delta`` is the atom-cavity detuning of the undriven model (chi = g^2/Delta),
    ``DeltaPrime`` the cavity-drive detuning (Gamma = chi kappa / DeltaPrime).
    ``Omega0`` and ``omega0`` are only used by the direct-atomic-drive models.
    """

    N: int
    chi: float = 1.0
    Delta: float | None = None
    DeltaPrime: float | None = None
    g: float | None = None
    kappa: float | None = None
    Gamma: float = 0.0
    omega0: float | None = None
    Omega0: float = 0.0

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        for name in ("chi", "g", "kappa", "Gamma", "omega0"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")
        if self.g is not None and self.Delta is not None:
            if not math.isclose(self.chi, self.g**2 / self.Delta, rel_tol=_REL):
                raise ValueError(f"chi={self.chi} inconsistent with g^2/Delta={self.g**2 / self.Delta}")
        if self.kappa is not None and self.DeltaPrime is not None:
            expected = self.chi * self.kappa / self.DeltaPrime
            if not math.isclose(self.Gamma, expected, rel_tol=_REL):
                raise ValueError(f"Gamma={self.Gamma} inconsistent with chi*kappa/DeltaPrime={expected}")

    @classmethod
    def dispersive(cls, N: int, g: float, DeltaPrime: float, kappa: float | None = None) -> ModelParams:
        """Parameters of the cavity-driven model with chi = g^2/DeltaPrime."""
        chi = g**2 / DeltaPrime
        gamma = chi * kappa / DeltaPrime if kappa is not None else 0.0
        return cls(N=N, chi=chi, DeltaPrime=DeltaPrime, g=g, kappa=kappa, Gamma=gamma)


@dataclass(frozen=True)
class DriveWaveform:
    """Effective drive amplitude on S_x.

    ``constant``: value ``offset`` at all times.
    ``pulse_train``: ``offset`` plus square pulses of height ``height`` and
    width ``duty * period``, one per period, centred on t = k * period.
    """

    kind: Literal["constant", "pulse_train"]
    offset: float = 0.0
    height: float = 0.0
    duty: float = 1.0
    period: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "pulse_train"):
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        if self.kind == "pulse_train":
            if not 0.0 < self.duty <= 1.0:
                raise ValueError(f"duty cycle must lie in (0, 1], got {self.duty}")
            if self.period <= 0:
                raise ValueError("period must be positive")

    @classmethod
    def constant(cls, omega0: float) -> DriveWaveform:
        return cls("constant", offset=float(omega0))

    @classmethod
    def pulse_train(cls, offset: float, height: float, duty: float, period: float) -> DriveWaveform:
        return cls("pulse_train", offset=float(offset), height=float(height), duty=float(duty), period=float(period))

    @classmethod
    def canonical(cls, duty: float, period: float, offset: float = 0.0) -> DriveWaveform:
        """Pulse train whose pulses each rotate the spin by pi."""
        return cls.pulse_train(offset, math.pi / (duty * period), duty, period)

    @property
    def width(self) -> float:
        return self.duty * self.period

    @property
    def modulation_frequency(self) -> float:
        return 2 * math.pi / self.period

    @property
    def pulse_area(self) -> float:
        return self.height * self.width

    def is_canonical(self, tol: float = 1e-9) -> bool:
        if self.kind != "pulse_train":
            return False
        return abs(self.height * self.duty / self.modulation_frequency - 0.5) <= tol

    def edges(self, t_end: float) -> np.ndarray:
        """Switching times in (0, t_end)."""
        if self.kind == "constant" or self.duty == 1.0:
            return np.empty(0)
        half = 0.5 * self.width
        k = np.arange(0, math.ceil(t_end / self.period) + 2)
        e = np.concatenate([k * self.period - half, k * self.period + half])
        e = e[(e > 0) & (e < t_end)]
        return np.unique(e)


def in_pulse(w: DriveWaveform, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if w.kind == "constant":
        return np.zeros(t.shape, dtype=bool)
    phase = np.mod(t + 0.5 * w.width, w.period)
    return phase < w.width


def drive_value(w: DriveWaveform, t):
    """Instantaneous effective drive amplitude; accepts scalars or arrays."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("drive is defined for t >= 0")
    if w.kind == "constant":
        out = np.full(np.shape(t), w.offset, dtype=float)
    else:
        out = w.offset + w.height * in_pulse(w, t)
    return float(out) if np.ndim(t) == 0 else out


def _pulse_measure(w: DriveWaveform, t):
    # measure of pulse support in [-width/2, t]
    x = np.asarray(t, dtype=float) + 0.5 * w.width
    return np.floor(x / w.period) * w.width + np.minimum(np.mod(x, w.period), w.width)


def pulse_integral(w: DriveWaveform, t):
    """Exact integral over [0, t] of the drive with the offset removed."""
    if w.kind == "constant":
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
    out = w.height * (_pulse_measure(w, t) - _pulse_measure(w, 0.0))
    return float(out) if np.ndim(t) == 0 else out


def step_phase(w: DriveWaveform, t, canonical: bool = True):
    """Rotation angle accumulated by the pulse train up to time ``t``.

    In the canonical configuration (pi area per pulse) the angle is constant
    between pulses and equals (m + 1/2) pi after the m-th full pulse.
    """
    if w.kind != "pulse_train":
        raise ConfigurationViolation("step_phase needs a pulse_train waveform")
    if canonical and not w.is_canonical():
        ratio = w.height * w.duty / w.modulation_frequency
        raise ConfigurationViolation(f"height*duty/omega = {ratio:.12g}, expected 1/2")
    if np.any(np.asarray(t) < 0):
        raise ValueError("step_phase is defined for t >= 0")
    return pulse_integral(w, t)


def frame_angle(w: DriveWaveform | None, t):
    """Angle of the x-rotation generated by the drive, used to enter its rotating frame.

    For a constant drive this is ``offset * t``; for a pulse train only the
    pulses contribute and the offset stays in the frame Hamiltonian.
    """
    if w is None:
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0
    if w.kind == "constant":
        return w.offset * np.asarray(t, dtype=float) if np.ndim(t) else w.offset * float(t)
    return pulse_integral(w, t)


def _check_ops(params: ModelParams, spin: SpinOperators, boson: BosonOperators | None = None) -> None:
    if spin.basis != Basis.spin(params.N):
        raise BasisMismatch(f"spin operators on {spin.basis}, params have N={params.N}")
    if boson is not None and boson.basis.kind != "boson":
        raise BasisMismatch(f"boson operators on {boson.basis}")


def _ck(spin_part: np.ndarray, boson_part: np.ndarray) -> np.ndarray:
    return np.kron(spin_part, boson_part)


def _composite(data: np.ndarray, spin: SpinOperators, boson: BosonOperators) -> OperatorMatrix:
    basis = Basis.composite(spin.basis.n_atoms, boson.basis.n_max)
    return OperatorMatrix(data, basis, hermitian=True)


def _tc_terms(params: ModelParams, spin: SpinOperators, boson: BosonOperators) -> np.ndarray:
    sz = spin.sz.data
    ib = np.eye(boson.basis.dim)
    return -2 * params.chi * _ck(sz, boson.number.data) + params.chi * _ck(sz @ sz, ib)


def h_eff_tc(params: ModelParams, spin: SpinOperators, boson: BosonOperators) -> OperatorMatrix:
    """Dispersive Tavis-Cummings Hamiltonian ``-2 chi a^dag a S_z + chi S_z^2``."""
    _check_ops(params, spin, boson)
    return _composite(_tc_terms(params, spin, boson), spin, boson)


def h_eff_driven(
    params: ModelParams, drive_value: float, spin: SpinOperators, boson: BosonOperators
) -> OperatorMatrix:
    """Cavity-driven dispersive Hamiltonian ``drive S_x - 2 chi a^dag a S_z + chi S_z^2``."""
    _check_ops(params, spin, boson)
    h = _tc_terms(params, spin, boson)
    if drive_value:
        h = h + drive_value * _ck(spin.sx.data, np.eye(boson.basis.dim))
    return _composite(h, spin, boson)


def h_full_driven_tc(
    params: ModelParams, drive_value: float, spin: SpinOperators, boson: BosonOperators
) -> OperatorMatrix:
    """Rotating-frame driven TC Hamiltonian before eliminating the cavity.

    ``DeltaPrime a^dag a + g (a^dag S_- + a S_+) + drive (a + a^dag)``, with
    ``drive_value`` the bare cavity drive Omega(t).
    """
    _check_ops(params, spin, boson)
    if params.g is None or params.DeltaPrime is None:
        raise ValueError("h_full_driven_tc needs g and DeltaPrime")
    a, ad, num = (op.data for op in boson)
    isp = np.eye(spin.basis.dim)
    h = params.DeltaPrime * _ck(isp, num)
    h = h + params.g * (_ck(spin.s_minus.data, ad) + _ck(spin.s_plus.data, a))
    if drive_value:
        h = h + drive_value * _ck(isp, a + ad)
    return _composite(h, spin, boson)


def h_ideal_oat(axis: Axis, strength: float, spin: SpinOperators, omega_x: float = 0.0) -> OperatorMatrix:
    """``strength * S_axis^2`` plus an optional twist-and-turn term ``omega_x S_x``."""
    s = spin.axis(axis).data
    h = strength * (s @ s)
    if omega_x:
        h = h + omega_x * spin.sx.data
    return OperatorMatrix(h, spin.basis, hermitian=True)


def h_spin_driven(params: ModelParams, drive_value: float, spin: SpinOperators) -> OperatorMatrix:
    """Spin-only part of the cavity-driven Hamiltonian, ``drive S_x + chi S_z^2``."""
    _check_ops(params, spin)
    sz = spin.sz.data
    return OperatorMatrix(drive_value * spin.sx.data + params.chi * (sz @ sz), spin.basis, hermitian=True)


def h_atom_driven(
    params: ModelParams,
    variant: Literal["constant_drive", "oscillating_drive"],
    spin: SpinOperators,
    boson: BosonOperators,
) -> OperatorMatrix:
    """Effective Hamiltonians for a drive applied directly to the atoms.

    ``constant_drive`` adds ``-(Omega0^2 / 2 omega0) S_z`` to the dispersive TC
    Hamiltonian; ``oscillating_drive`` adds ``(Omega0/2) S_x - (Omega0^2 / 16 omega0) S_z``.
    """
    _check_ops(params, spin, boson)
    om = params.Omega0
    if om and not params.omega0:
        raise ValueError("direct atomic drive needs omega0 > 0")
    ib = np.eye(boson.basis.dim)
    h = _tc_terms(params, spin, boson)
    if variant == "constant_drive":
        if om:
            h = h - (om**2 / (2 * params.omega0)) * _ck(spin.sz.data, ib)
    elif variant == "oscillating_drive":
        if om:
            h = h + (om / 2) * _ck(spin.sx.data, ib) - (om**2 / (16 * params.omega0)) * _ck(spin.sz.data, ib)
    else:
        raise ValueError(f"unknown atom-drive variant {variant!r}")
    return _composite(h, spin, boson)
