"""Experiment configuration files.

Configs are INI files read with :mod:`configparser`. Keys carry their unit
in a suffix: ``_hz`` values are frequencies in Hz (converted to rad/s when
the problem is built) and ``_s`` values are durations in seconds. Lists are
comma separated. Every validation error reports the offending line.

Sections and keys (``*`` marks required keys)::

    [experiment]  name, trials, seed_base, u_max_hz
    [system]      *kind (ising2 | qft | nmr_pair), task, *segments, *duration_s,
                  coupling_hz, offsets_hz, qubits, delta_nu_hz, j_hz
    [optimizer]   *method (grape | krotov), iterations, fidelity_goal,
                  push_weight, orthogonal_L, refresh, candidate_kind, penalty,
                  rf_scales, rf_weights, stall_window, step_size (grape),
                  delta, eta, kappa (krotov)
    [sweep]       *parameter (L | alpha), *values
    [output]      dir, export_pulses
    [profile]     scales, pulse
"""
from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .. import grape, krotov, systems
from ..errors import ConfigError, ContractError
from ..linalg import RngStream
from ..model import ControlProblem

__all__ = [
    "ExperimentConfig",
    "SystemSpec",
    "OptimizerSpec",
    "SweepSpec",
    "load_config",
    "parse_config",
    "build_problem",
    "build_optimizer_config",
    "initial_pulse",
]


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    task: str
    segments: int
    duration_s: float
    coupling_hz: float = 100.0
    offsets_hz: tuple = ()
    qubits: int = 2
    delta_nu_hz: float = 127.6
    j_hz: float = 8.8


@dataclass(frozen=True)
class OptimizerSpec:
    method: str
    iterations: int = 300
    fidelity_goal: float = 0.9999
    push_weight: float = 0.0
    orthogonal_L: int = 0
    refresh: str = "fixed"
    candidate_kind: str | None = None
    penalty: float | None = None
    rf_scales: tuple = (1.0,)
    rf_weights: tuple | None = None
    stall_window: int = 50
    step_size: float = 1e6
    delta: float = 1.0
    eta: float = 1.0
    kappa: float = 0.01


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec
    optimizer: OptimizerSpec
    name: str = "experiment"
    trials: int = 1
    seed_base: int = 0
    u_max_hz: float = 1000.0
    sweep: SweepSpec | None = None
    output_dir: str = "results"
    export_pulses: bool = False
    profile_scales: tuple = (0.95, 1.0, 1.05)
    profile_pulse: str | None = None
    source: str | None = field(default=None, compare=False)

    @property
    def u_max(self) -> float:
        """Amplitude bound of the random initial pulses in rad/s."""
        return systems.hz(self.u_max_hz)

    def canonical(self) -> dict:
        """Plain-data view used for hashing and for the record sidecar."""
        d = asdict(self)
        d.pop("source")
        return json.loads(json.dumps(d))

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def sweep_values(self) -> tuple:
        """Optimizer settings to run: the sweep values, or the single configured one."""
        if self.sweep is None:
            return (("L", self.optimizer.orthogonal_L),)
        return tuple((self.sweep.parameter, v) for v in self.sweep.values)

    def with_seed(self, seed_base: int) -> "ExperimentConfig":
        return replace(self, seed_base=int(seed_base))


# key -> (parser, required)
def _str(v):
    return v.strip()


def _opt_str(v):
    v = v.strip()
    return v or None


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _opt_float(v):
    v = v.strip()
    return float(v) if v else None


def _floats(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _opt_floats(v):
    t = _floats(v)
    return t or None


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


_SCHEMA = {
    "experiment": {
        "name": (_str, False), "trials": (_int, False), "seed_base": (_int, False),
        "u_max_hz": (_float, False),
    },
    "system": {
        "kind": (_str, True), "task": (_str, False), "segments": (_int, True),
        "duration_s": (_float, True), "coupling_hz": (_float, False),
        "offsets_hz": (_floats, False), "qubits": (_int, False),
        "delta_nu_hz": (_float, False), "j_hz": (_float, False),
    },
    "optimizer": {
        "method": (_str, True), "iterations": (_int, False), "fidelity_goal": (_float, False),
        "push_weight": (_float, False), "orthogonal_L": (_int, False), "refresh": (_str, False),
        "candidate_kind": (_opt_str, False), "penalty": (_opt_float, False),
        "rf_scales": (_floats, False), "rf_weights": (_opt_floats, False),
        "stall_window": (_int, False), "step_size": (_float, False), "delta": (_float, False),
        "eta": (_float, False), "kappa": (_float, False),
    },
    "sweep": {"parameter": (_str, True), "values": (_floats, True)},
    "output": {"dir": (_str, False), "export_pulses": (_bool, False)},
    "profile": {"scales": (_floats, False), "pulse": (_opt_str, False)},
}

_DEFAULT_TASK = {"ising2": "cnot", "qft": "qft", "nmr_pair": "lls"}
_TASKS = {"ising2": ("cnot", "singlet"), "qft": ("qft",), "nmr_pair": ("lls",)}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), n)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            index.setdefault((section, m.group(1).strip()), n)
    return index


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=str(path)) from None
    return parse_config(text, path=str(path))


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    """Parse and validate config ``text``."""
    lines = _line_index(text)

    def fail(msg, section=None, key=None):
        line = lines.get((section, key)) or lines.get((section, None))
        raise ConfigError(msg, line=line, path=path)

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", line=exc.lineno, path=path) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", line=exc.lineno, path=path) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", line=exc.lineno, path=path) from None
    except configparser.ParsingError as exc:
        raise ConfigError("unparsable line", line=exc.errors[0][0], path=path) from None

    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            fail(f"unknown section [{section}]", section)
        schema = _SCHEMA[section]
        values[section] = {}
        for key, raw in cp.items(section):
            if key not in schema:
                fail(f"unknown key {key!r} in [{section}]", section, key)
            try:
                values[section][key] = schema[key][0](raw)
            except ValueError as exc:
                fail(f"bad value for {key!r}: {exc}", section, key)
        for key, (_, required) in schema.items():
            if required and key not in values[section]:
                fail(f"missing required key {key!r} in [{section}]", section)
    for section in ("system", "optimizer"):
        if section not in values:
            raise ConfigError(f"missing section [{section}]", line=None, path=path)

    sysv = dict(values["system"])
    kind = sysv["kind"]
    if kind not in _TASKS:
        fail(f"unknown system kind {kind!r}", "system", "kind")
    sysv.setdefault("task", _DEFAULT_TASK[kind])
    if sysv["task"] not in _TASKS[kind]:
        fail(f"task {sysv['task']!r} not available for {kind}", "system", "task")
    if sysv["segments"] < 1:
        fail("segments must be >= 1", "system", "segments")
    if not sysv["duration_s"] > 0:
        fail("duration_s must be positive", "system", "duration_s")
    if kind == "qft" and not 1 <= sysv.get("qubits", 2) <= 10:
        fail("qubits must lie in [1, 10]", "system", "qubits")
    system = SystemSpec(**sysv)

    opt = dict(values["optimizer"])
    if opt["method"] not in ("grape", "krotov"):
        fail(f"unknown method {opt['method']!r}", "optimizer", "method")
    if opt.get("refresh", "fixed") not in ("fixed", "per_iteration"):
        fail("refresh must be fixed or per_iteration", "optimizer", "refresh")
    optimizer = OptimizerSpec(**opt)

    exp = values.get("experiment", {})
    if exp.get("trials", 1) < 1:
        fail("trials must be >= 1", "experiment", "trials")
    if exp.get("seed_base", 0) < 0:
        fail("seed_base must be >= 0", "experiment", "seed_base")
    if not exp.get("u_max_hz", 1.0) >= 0:
        fail("u_max_hz must be >= 0", "experiment", "u_max_hz")

    sweep = None
    if "sweep" in values:
        sv = values["sweep"]
        if sv["parameter"] not in ("L", "alpha"):
            fail("sweep parameter must be L or alpha", "sweep", "parameter")
        vals = sv["values"]
        if not vals:
            fail("sweep needs at least one value", "sweep", "values")
        if sv["parameter"] == "L":
            if any(v < 0 or v != int(v) for v in vals):
                fail("L values must be non-negative integers", "sweep", "values")
            vals = tuple(int(v) for v in vals)
        elif any(not -1 <= v <= 1 for v in vals):
            fail("alpha values must lie in [-1, 1]", "sweep", "values")
        sweep = SweepSpec(sv["parameter"], tuple(vals))

    out = values.get("output", {})
    prof = values.get("profile", {})
    cfg = ExperimentConfig(
        system=system, optimizer=optimizer, sweep=sweep, source=path,
        output_dir=out.get("dir", "results"), export_pulses=out.get("export_pulses", False),
        profile_scales=prof.get("scales", (0.95, 1.0, 1.05)), profile_pulse=prof.get("pulse"),
        **exp,
    )
    # constructor-level checks, reported against the optimizer section
    try:
        problem = build_problem(cfg)
        for name, value in cfg.sweep_values():
            build_optimizer_config(cfg, problem, name, value, rng_seed=0)
    except ContractError as exc:
        fail(str(exc), "sweep" if sweep is not None else "optimizer")
    return cfg


def build_problem(cfg: ExperimentConfig) -> ControlProblem:
    s = cfg.system
    dt = s.duration_s / s.segments
    if s.kind == "ising2":
        task = systems.singlet_task() if s.task == "singlet" else None
        return systems.ising_two_qubit(s.coupling_hz, _offsets(s, 2), task=task,
                                       n_segments=s.segments, dt=dt)
    if s.kind == "qft":
        return systems.qft_problem(s.qubits, s.coupling_hz, _offsets(s, s.qubits),
                                   n_segments=s.segments, dt=dt)
    return systems.nmr_pair(s.delta_nu_hz, s.j_hz, n_segments=s.segments, dt=dt)


def _offsets(s: SystemSpec, n_qubits: int):
    if not s.offsets_hz:
        return (0.0,) * n_qubits
    if len(s.offsets_hz) == 1:
        return tuple(s.offsets_hz) * n_qubits
    if len(s.offsets_hz) != n_qubits:
        raise ContractError(f"offsets_hz needs 1 or {n_qubits} values")
    return tuple(s.offsets_hz)


def build_optimizer_config(cfg: ExperimentConfig, problem: ControlProblem, parameter: str,
                           value, rng_seed: int):
    """Optimizer config for one sweep value and one trial seed."""
    o = cfg.optimizer
    L, alpha = o.orthogonal_L, o.push_weight
    if parameter == "L":
        L = int(value)
    else:
        alpha = float(value)
    if L == 0:
        alpha = 0.0
    common = dict(
        max_iterations=o.iterations, fidelity_goal=o.fidelity_goal, push_weight=alpha,
        orthogonal_L=L, candidate_kind=o.candidate_kind, refresh_policy=o.refresh,
        rng_seed=int(rng_seed), rf_scales=tuple(o.rf_scales), rf_weights=o.rf_weights,
        stall_window=o.stall_window,
    )
    if L > problem.dim**2 - 1:
        raise ContractError(f"orthogonal_L={L} exceeds d^2-1={problem.dim**2 - 1}")
    if o.rf_weights is not None and len(o.rf_weights) != len(o.rf_scales):
        raise ContractError("rf_weights must match rf_scales")
    if o.method == "grape":
        pen = None if o.penalty is None else (o.penalty,) * problem.n_controls
        return grape.GrapeConfig(step_size=o.step_size, penalties=pen, **common)
    pen = (1e-4,) if o.penalty is None else (o.penalty,)
    return krotov.KrotovConfig(delta=o.delta, eta=o.eta, kappa=o.kappa, penalties=pen, **common)


def initial_pulse(cfg: ExperimentConfig, problem: ControlProblem, seed: int) -> np.ndarray:
    """Random guess for trial ``seed``: uniform in ``[-u_max, u_max]``."""
    return RngStream(seed).substream(0).uniform(-cfg.u_max, cfg.u_max, problem.shape)
