"""Declarative scenarios: configuration, presets, runner and parameter sweeps."""
from __future__ import annotations

import configparser
import csv
import dataclasses
import datetime as _dt
import json
import logging
import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.signal import find_peaks

from drivenoat import __version__
from drivenoat.boson import BosonInput, BosonSpace, input_state, ladder_operators, truncation_recommendation
from drivenoat.errors import ConfigError, DrivenOATError
from drivenoat.model import (
    DriveWaveform,
    ModelParams,
    frame_angle,
    h_atom_driven,
    h_eff_driven,
    h_eff_tc,
    h_full_driven_tc,
    h_ideal_oat,
)
from drivenoat.numerics import TOL, QuantumState, kron_states, partial_trace_boson
from drivenoat.observables import fidelity, purity, spin_means, sphere_map, squeezing_parameter
from drivenoat.propagation import (
    TimeGrid,
    evolve_lindblad,
    evolve_lindblad_piecewise,
    evolve_unitary_pulsed,
    evolve_unitary_static,
    lindblad_builders,
)
from drivenoat.spin import CssSpec, SpinEnsemble, collective_operators, css_state, rotation_matrix

log = logging.getLogger(__name__)

MODELS = ("dispersive", "cavity_driven", "ideal_oat", "full_tc", "atom_driven", "lindblad")
DRIVES = ("none", "constant", "pulse_train")
COLUMNS = ("t", "xi2", "fidelity_ghz", "purity", "sx_mean", "min_variance", "trace_error")
INITIAL = {"x": CssSpec(math.pi / 2, 0.0), "z": CssSpec(0.0, 0.0)}


@dataclass(frozen=True)
class ScenarioConfig:
    """Flat description of one trajectory; every field can be set from a config file."""

    scenario: str = "custom"
    N: int = 10
    input_kind: str = "coherent"
    input_value: float = 1.0
    model: str = "dispersive"
    initial: str = "x"
    # ideal OAT generator strength * S_axis^2
    axis: str = "z"
    strength: float = 1.0
    variant: str = "constant_drive"
    lindblad_kind: str = "constant_frame"
    drive: str = "none"
    omega0: float = 0.0
    duty: float = 0.0
    period: float = 0.1
    height: float | None = None
    gamma: float = 0.0
    coupling_ratio: float = 20.0
    atom_drive: float = 0.0
    atom_frequency: float = 1e6
    t_end: float = 1.0
    n_samples: int = 201
    ghz_axis: str | None = None
    ghz_strength: float | None = None
    observables: tuple[str, ...] = COLUMNS[1:]
    out: str | None = None
    n_max: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.drive not in DRIVES:
            raise ConfigError(f"unknown drive {self.drive!r}; choose from {DRIVES}")
        if self.initial not in INITIAL:
            raise ConfigError(f"initial must be one of {sorted(INITIAL)}")
        if self.input_kind not in ("fock", "coherent", "thermal", "squeezed"):
            raise ConfigError(f"unknown input kind {self.input_kind!r}")
        if self.lindblad_kind not in ("lab_frame", "constant_frame", "constant_frame_doubled", "pulsed_frame"):
            raise ConfigError(f"unknown master equation {self.lindblad_kind!r}")
        if self.variant not in ("constant_drive", "oscillating_drive"):
            raise ConfigError(f"unknown atom-drive variant {self.variant!r}")
        if self.axis not in ("x", "y", "z") or (self.ghz_axis not in (None, "x", "y", "z")):
            raise ConfigError("axes must be x, y or z")
        if self.N < 1 or self.n_samples < 1 or self.t_end < 0:
            raise ConfigError("need N >= 1, n_samples >= 1 and t_end >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.drive == "pulse_train" and not 0 < self.duty <= 1:
            raise ConfigError("pulse_train drive needs 0 < duty <= 1")
        bad = set(self.observables) - set(COLUMNS[1:])
        if bad:
            raise ConfigError(f"unknown observables {sorted(bad)}")
        object.__setattr__(self, "observables", tuple(self.observables))

    # --- derived pieces -------------------------------------------------------

    @property
    def boson_input(self) -> BosonInput:
        try:
            if self.input_kind == "fock":
                return BosonInput.fock(int(self.input_value))
            return BosonInput(self.input_kind, self.input_value)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    @property
    def waveform(self) -> DriveWaveform | None:
        if self.drive == "none":
            return None
        if self.drive == "constant":
            return DriveWaveform.constant(self.omega0)
        if self.height is None:
            return DriveWaveform.canonical(self.duty, self.period, offset=self.omega0)
        return DriveWaveform.pulse_train(self.omega0, self.height, self.duty, self.period)

    @property
    def grid(self) -> TimeGrid:
        if self.n_samples == 1:
            return TimeGrid.from_samples([0.0])
        return TimeGrid.uniform(self.t_end, self.n_samples)

    def ghz_generator(self) -> tuple[str, float]:
        """OAT generator ``strength * S_axis^2`` whose quarter period defines the GHZ target."""
        if self.ghz_axis is not None:
            return self.ghz_axis, self.ghz_strength if self.ghz_strength is not None else 1.0
        if self.model == "ideal_oat":
            return self.axis, self.strength
        if self.model == "lindblad":
            return {
                "constant_frame": ("x", -0.5),
                "constant_frame_doubled": ("x", -1.0),
                "pulsed_frame": ("y", 1.0),
                "lab_frame": ("x", -0.5) if self.drive == "constant" else ("y", 1.0) if self.drive == "pulse_train" else ("z", 1.0),
            }[self.lindblad_kind]
        if self.drive == "constant":
            return "x", -0.5
        if self.drive == "pulse_train":
            return "y", 1.0
        return "z", 1.0

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["observables"] = list(self.observables)
        return d


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(name: str, raw: Any) -> Any:
    if name not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {name!r}")
    kind = _FIELD_TYPES[name]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if "None" in kind and text.lower() in ("", "none", "null"):
        return None
    try:
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        if kind.startswith("tuple"):
            return tuple(s.strip() for s in text.split(",") if s.strip())
    except ValueError as e:
        raise ConfigError(f"bad value {raw!r} for {name}: {e}") from None
    return text


def numeric_fields() -> list[str]:
    return [n for n, k in _FIELD_TYPES.items() if k.startswith(("int", "float"))]


def with_overrides(base: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    values = {k: _coerce(k, v) for k, v in overrides.items()}
    try:
        return replace(base, **values)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path: str | Path, **overrides: Any) -> ScenarioConfig:
    """Read an INI file; keys from all sections are merged into one flat config.

    ``preset = NAME`` (in any section) starts from a code-defined preset.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    flat: dict[str, str] = {}
    for section in parser.sections():
        flat.update(parser[section])
    base = preset(flat.pop("preset")) if "preset" in flat else ScenarioConfig()
    flat.update({k: v for k, v in overrides.items() if v is not None})
    return with_overrides(base, **flat)


# --- presets ----------------------------------------------------------------------


def _presets() -> dict[str, ScenarioConfig]:
    p: dict[str, ScenarioConfig] = {}

    def add(name: str, **kw: Any) -> None:
        p[name] = ScenarioConfig(name, **kw)

    coh = dict(N=10, input_kind="coherent", input_value=1.0)
    # constant cavity drive: effective twist about x, started from the pole
    sq = dict(coh, t_end=1.0, n_samples=401)
    add("const_sq_ideal", model="ideal_oat", axis="x", strength=-0.5, initial="z", **sq)
    add("const_sq_undriven", model="dispersive", initial="x", **sq)
    for om in (16, 32, 160):
        add(f"const_sq_omega{om}", model="cavity_driven", drive="constant", omega0=float(om), initial="z", **sq)
    ghz = dict(coh, t_end=3.5 * math.pi, n_samples=3501)
    add("const_ghz_undriven", model="dispersive", initial="x", **ghz)
    for om in (32, 160):
        add(f"const_ghz_omega{om}", model="cavity_driven", drive="constant", omega0=float(om), initial="z", **ghz)

    # pulse-train drive with period 0.1: effective twist about y
    pulsed = dict(coh, initial="x", period=0.1, omega0=0.0)
    add("pulsed_sq_ideal", model="ideal_oat", axis="y", strength=1.0, t_end=1.0, n_samples=401, **pulsed)
    add("pulsed_sq_undriven", model="dispersive", t_end=1.0, n_samples=401, **pulsed)
    for d in (0.3, 0.01):
        add(f"pulsed_sq_d{round(d * 100):02d}", model="cavity_driven", drive="pulse_train", duty=d,
            t_end=1.0, n_samples=401, **pulsed)
    add("pulsed_ghz_undriven", model="dispersive", t_end=math.pi, n_samples=2001, **pulsed)
    for d in (0.2, 0.04):
        add(f"pulsed_ghz_d{round(d * 100):02d}", model="cavity_driven", drive="pulse_train", duty=d,
            t_end=math.pi, n_samples=2001, **pulsed)

    decay = dict(N=10, model="lindblad", gamma=0.01, t_end=4.0, n_samples=801)
    add("decay_constant_frame", lindblad_kind="constant_frame", initial="z", **decay)
    add("decay_constant_frame_doubled", lindblad_kind="constant_frame_doubled", initial="z", **decay)
    add("decay_pulsed_frame", lindblad_kind="pulsed_frame", initial="x", **decay)
    return p


PRESETS: dict[str, ScenarioConfig] = _presets()


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; try list-presets") from None


# --- results ----------------------------------------------------------------------


@dataclass
class ResultSeries:
    columns: dict[str, np.ndarray]
    metadata: dict[str, Any]
    maps: dict[str, Any] = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.columns["t"]

    def __len__(self) -> int:
        return len(self.columns["t"])

    def summary(self) -> dict[str, float]:
        xi2 = self.columns.get("xi2")
        f = self.columns.get("fidelity_ghz")
        return {
            "min_xi2": float(np.nanmin(xi2)) if xi2 is not None else math.nan,
            "t_min_xi2": float(self.t[int(np.nanargmin(xi2))]) if xi2 is not None else math.nan,
            "max_fidelity": float(np.nanmax(f)) if f is not None else math.nan,
            "t_max_fidelity": float(self.t[int(np.nanargmax(f))]) if f is not None else math.nan,
        }

    def write(self, path: str | Path, timestamp: bool = True) -> tuple[Path, Path]:
        """CSV with full-precision values plus a JSON metadata sidecar next to it."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        names = list(self.columns)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*(self.columns[n] for n in names)):
                w.writerow(["%.17g" % v for v in row])
        meta = dict(self.metadata)
        if timestamp:
            meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
        side = path.with_suffix(".json")
        side.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
        return path, side


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialize {type(o)}")


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    return {n: data[:, i] for i, n in enumerate(names)}


# --- runner -----------------------------------------------------------------------


def _ghz_target(cfg: ScenarioConfig, ens: SpinEnsemble, init: QuantumState) -> QuantumState:
    axis, strength = cfg.ghz_generator()
    ops = collective_operators(ens)
    t = math.pi / (2 * abs(strength))
    return evolve_unitary_static(h_ideal_oat(axis, strength, ops), init, TimeGrid.from_samples([0.0, t]))[-1]


def _frame_drive(cfg: ScenarioConfig, params: ModelParams | None) -> DriveWaveform | None:
    """Effective S_x drive whose rotation defines the frame used for fidelities."""
    w = cfg.waveform
    if cfg.model == "full_tc" and w is not None and params is not None:
        # the bare cavity drive maps onto 2 g Omega / Delta' on S_x
        return DriveWaveform.constant(2 * params.g * cfg.omega0 / params.DeltaPrime)
    if cfg.model in ("cavity_driven", "full_tc") or (cfg.model == "lindblad" and cfg.lindblad_kind == "lab_frame"):
        return w
    return None


def _evolve(cfg: ScenarioConfig) -> tuple[list[QuantumState], dict[str, Any], ModelParams | None]:
    ens = SpinEnsemble(cfg.N)
    ops = collective_operators(ens)
    init = css_state(ens, INITIAL[cfg.initial])
    grid = cfg.grid
    info: dict[str, Any] = {}
    w = cfg.waveform

    if cfg.model == "ideal_oat":
        h = h_ideal_oat(cfg.axis, cfg.strength, ops, omega_x=cfg.omega0 if cfg.drive == "constant" else 0.0)
        return evolve_unitary_static(h, init, grid), info, None

    if cfg.model == "lindblad":
        params = ModelParams(cfg.N, Gamma=cfg.gamma)
        rho0 = init.to_density()
        if cfg.lindblad_kind == "lab_frame" and w is not None and w.kind == "pulse_train":
            out = evolve_lindblad_piecewise(lambda v: lindblad_builders("lab_frame", params, ops, drive=v), w, rho0, grid)
        else:
            drive = w.offset if (w is not None and cfg.lindblad_kind == "lab_frame") else 0.0
            out = evolve_lindblad(lindblad_builders(cfg.lindblad_kind, params, ops, drive=drive), rho0, grid)
        return out, info, params

    inp = cfg.boson_input
    n_max = cfg.n_max if cfg.n_max is not None else truncation_recommendation(inp)
    if cfg.model == "full_tc":
        # the exchange term moves excitations between atoms and mode
        n_max = n_max + cfg.N + (8 if cfg.omega0 else 0) if cfg.n_max is None else n_max
    info["n_max"] = n_max
    boson = ladder_operators(BosonSpace(n_max))
    psi0 = kron_states(init, input_state(BosonSpace(n_max), inp))

    if cfg.model == "dispersive":
        params = ModelParams(cfg.N)
        return evolve_unitary_static(h_eff_tc(params, ops, boson), psi0, grid), info, params
    if cfg.model == "cavity_driven":
        params = ModelParams(cfg.N)
        if w is None:
            h = h_eff_driven(params, 0.0, ops, boson)
            return evolve_unitary_static(h, psi0, grid), info, params
        if w.kind == "constant":
            return evolve_unitary_static(h_eff_driven(params, w.offset, ops, boson), psi0, grid), info, params
        return evolve_unitary_pulsed(params, w, psi0, grid), info, params
    if cfg.model == "full_tc":
        r = cfg.coupling_ratio
        params = ModelParams.dispersive(cfg.N, g=r, DeltaPrime=r * r)
        if w is not None and w.kind != "constant":
            raise ConfigError("full_tc supports only constant or no drive")
        h = h_full_driven_tc(params, cfg.omega0 if w is not None else 0.0, ops, boson)
        return evolve_unitary_static(h, psi0, grid), info, params
    # atom_driven
    params = ModelParams(cfg.N, omega0=cfg.atom_frequency, Omega0=cfg.atom_drive)
    h = h_atom_driven(params, cfg.variant, ops, boson)
    return evolve_unitary_static(h, psi0, grid), info, params


def _label_peaks(t: np.ndarray, f: np.ndarray, count: int = 2) -> list[dict[str, float]]:
    """Most prominent fidelity maxima, labelled I, II, ... in time order."""
    if f.size < 3:
        return []
    idx, props = find_peaks(f, prominence=0.05)
    top = sorted(idx[np.argsort(-f[idx])][:count])
    labels = ("I", "II", "III", "IV")
    return [
        {"label": labels[k], "t": float(t[i]), "fidelity": float(f[i]), "index": int(i)}
        for k, i in enumerate(top)
    ]


def run_scenario(cfg: ScenarioConfig, sphere_maps: bool = False, map_resolution: int = 48) -> ResultSeries:
    """Evolve one scenario and tabulate its observables at every sample time."""
    try:
        states, info, params = _evolve(cfg)
        ens = SpinEnsemble(cfg.N)
        init = css_state(ens, INITIAL[cfg.initial])
        target = _ghz_target(cfg, ens, init)
        frame = _frame_drive(cfg, params)
        t = cfg.grid.samples
        cols = {n: np.full(t.size, np.nan) for n in COLUMNS}
        cols["t"] = np.array(t)
        frame_states = []
        for i, (s, ti) in enumerate(zip(states, t)):
            spin = partial_trace_boson(s) if s.basis.kind == "composite" else s
            if frame is not None:
                u = rotation_matrix(ens, "x", -frame_angle(frame, ti))
                rf = QuantumState(u @ spin.density() @ u.conj().T, spin.basis, validate=False)
            else:
                rf = spin
            frame_states.append(rf)
            rep = squeezing_parameter(spin)
            cols["xi2"][i] = rep.xi2
            cols["min_variance"][i] = rep.min_variance
            cols["fidelity_ghz"][i] = fidelity(rf, target)
            cols["purity"][i] = purity(spin)
            cols["sx_mean"][i] = spin_means(spin)[0]
            cols["trace_error"][i] = abs(np.trace(spin.density()) - 1.0)
    except DrivenOATError as e:
        e.args = (f"scenario {cfg.scenario}: {e.args[0] if e.args else e}",) + tuple(e.args[1:])
        raise
    keep = ("t",) + tuple(n for n in COLUMNS[1:] if n in cfg.observables)
    peaks = _label_peaks(cols["t"], cols["fidelity_ghz"])
    meta = {
        "config": cfg.to_dict(),
        "truncation": info.get("n_max"),
        "tolerances": dataclasses.asdict(TOL),
        "versions": {
            "drivenoat": __version__,
            "numpy": np.__version__,
            "scipy": __import__("scipy").__version__,
            "python": platform.python_version(),
        },
        "ghz_generator": list(cfg.ghz_generator()),
        "fidelity_peaks": peaks,
        "summary": None,
    }
    series = ResultSeries({k: cols[k] for k in keep}, meta)
    meta["summary"] = series.summary()
    if sphere_maps:
        for pk in peaks:
            series.maps[pk["label"]] = sphere_map(frame_states[pk["index"]], "wigner", map_resolution)
    return series


# --- sweeps -----------------------------------------------------------------------


@dataclass
class SweepResult:
    axis: str
    values: list[float]
    series: list[ResultSeries | None]
    failures: list[tuple[float, str]]

    def summary_rows(self) -> list[dict[str, float]]:
        rows = []
        for v, s in zip(self.values, self.series):
            if s is None:
                rows.append({"value": v, "min_xi2": math.nan, "max_fidelity": math.nan})
            else:
                sm = s.summary()
                rows.append({"value": v, "min_xi2": sm["min_xi2"], "max_fidelity": sm["max_fidelity"]})
        return rows

    def write_summary(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.axis, "min_xi2", "max_fidelity"])
            for r in self.summary_rows():
                w.writerow(["%.17g" % r["value"], "%.17g" % r["min_xi2"], "%.17g" % r["max_fidelity"]])
        return path


def _run_point(cfg: ScenarioConfig) -> tuple[ResultSeries | None, str | None]:
    try:
        return run_scenario(cfg), None
    except DrivenOATError as e:
        return None, f"{type(e).__name__}: {e}"


def run_sweep(base: ScenarioConfig, axis: str, values: Sequence[float], workers: int | None = None) -> SweepResult:
    """Run ``base`` once per value of the numeric field ``axis``; results keep input order."""
    if axis not in numeric_fields():
        raise ConfigError(f"sweep axis {axis!r} is not a numeric config field")
    kind = _FIELD_TYPES[axis]
    cast = int if kind.startswith("int") else float
    configs = [
        replace(base, **{axis: cast(v)}, scenario=f"{base.scenario}[{axis}={v}]") for v in values
    ]
    workers = workers or base.workers
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as ex:
            results = list(ex.map(_run_point, configs))
    else:
        results = [_run_point(c) for c in configs]
    failures = [(float(v), err) for v, (_, err) in zip(values, results) if err is not None]
    return SweepResult(axis, [float(v) for v in values], [s for s, _ in results], failures)
