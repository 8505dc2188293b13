"""Seeded trial batches, run records and advantage factors."""
from __future__ import annotations

import csv
import io
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import grape, krotov
from ..errors import ContractError
from .config import ExperimentConfig, build_optimizer_config, build_problem, initial_pulse
from .pulsefile import export_pulse

__all__ = [
    "SCHEMA_VERSION",
    "TrialResult",
    "RunRecord",
    "Advantage",
    "trial_seed",
    "run_trial",
    "run_experiment",
    "advantage_factor",
]

SCHEMA_VERSION = 1
TRIAL_COLUMNS = ("parameter", "value", "trial", "seed", "final_fidelity", "iterations",
                 "termination", "wall_time", "error")
WALL_TIME_FIELDS = ("wall_time",)


def trial_seed(seed_base: int, t: int) -> int:
    """Seed of trial ``t``; shared by every sweep value."""
    return int(seed_base) ^ int(t)


@dataclass(frozen=True)
class TrialResult:
    parameter: str
    value: float
    trial: int
    seed: int
    final_fidelity: float
    iterations: int
    termination: str
    wall_time: float
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)


@dataclass
class RunRecord:
    """Results of one experiment.

    ``curves`` maps each sweep value to the per-iteration mean infidelity
    over successful trials; runs that stop early are padded with their last
    value.
    """

    config_hash: str
    name: str
    parameter: str
    values: tuple
    trials: list
    curves: dict
    config: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def by_value(self, value) -> list:
        return [t for t in self.trials if t.value == value]

    def mean_fidelity(self, value) -> float:
        ok = [t.final_fidelity for t in self.by_value(value) if not t.failed]
        return float(np.mean(ok)) if ok else float("nan")

    def mean_wall_time(self, value) -> float:
        ok = [t.wall_time for t in self.by_value(value) if not t.failed]
        return float(np.mean(ok)) if ok else float("nan")

    def relative_time(self) -> dict:
        """Mean wall time per value normalized by the ``L = 0`` mean."""
        if self.parameter != "L" or 0 not in self.values:
            return {}
        ref = self.mean_wall_time(0)
        return {v: self.mean_wall_time(v) / ref for v in self.values}

    @property
    def n_failed(self) -> int:
        return sum(t.failed for t in self.trials)

    def deterministic_view(self) -> dict:
        """Record content without wall-time fields."""
        trials = [{k: v for k, v in asdict(t).items() if k not in WALL_TIME_FIELDS}
                  for t in self.trials]
        curves = {str(v): [float(x) for x in c] for v, c in self.curves.items()}
        return {"config_hash": self.config_hash, "name": self.name, "parameter": self.parameter,
                "values": list(self.values), "trials": trials, "curves": curves,
                "config": self.config, "schema_version": self.schema_version}

    # files
    def save(self, out_dir) -> Path:
        """Write ``trials.csv``, ``curve.csv`` and the ``record.json`` sidecar."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = f"# config_hash={self.config_hash} schema_version={self.schema_version}\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for t in self.trials:
            w.writerow([t.parameter, _num(t.value), t.trial, t.seed, _num(t.final_fidelity),
                        t.iterations, t.termination, _num(t.wall_time), t.error])
        (out / "trials.csv").write_text(header + buf.getvalue())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration"] + [f"{self.parameter}={_num(v)}" for v in self.values])
        length = max((len(c) for c in self.curves.values()), default=0)
        for i in range(length):
            row = [i]
            for v in self.values:
                c = self.curves.get(v, ())
                row.append(_num(c[i]) if i < len(c) else "")
            w.writerow(row)
        (out / "curve.csv").write_text(header + buf.getvalue())
        meta = {"config_hash": self.config_hash, "schema_version": self.schema_version,
                "name": self.name, "parameter": self.parameter, "values": list(self.values),
                "config": self.config, "n_failed": self.n_failed}
        adv = None
        if _has_advantage(self):
            try:
                adv = advantage_factor(self, warn=False)
            except ContractError:
                meta["advantage"] = None
        if adv is not None:
            meta["advantage"] = asdict(adv)
            if adv.infinite:
                meta["advantage"]["factor"] = "inf"
            meta["relative_time"] = {_num(k): v for k, v in self.relative_time().items()}
        (out / "record.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json) + "\n")
        return out

    @classmethod
    def load(cls, path) -> "RunRecord":
        """Read a record written by :meth:`save` (directory or ``record.json``)."""
        path = Path(path)
        out = path.parent if path.is_file() else path
        meta = json.loads((out / "record.json").read_text())
        parameter = meta["parameter"]
        cast = int if parameter == "L" else float
        values = tuple(cast(v) for v in meta["values"])
        trials = []
        with open(out / "trials.csv", newline="") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            for r in rows:
                trials.append(TrialResult(
                    parameter=r["parameter"], value=cast(float(r["value"])), trial=int(r["trial"]),
                    seed=int(r["seed"]), final_fidelity=float(r["final_fidelity"]),
                    iterations=int(r["iterations"]), termination=r["termination"],
                    wall_time=float(r["wall_time"]), error=r["error"]))
        curves = {v: [] for v in values}
        with open(out / "curve.csv", newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            next(reader)
            for row in reader:
                for v, x in zip(values, row[1:]):
                    if x != "":
                        curves[v].append(float(x))
        curves = {v: np.array(c) for v, c in curves.items()}
        return cls(meta["config_hash"], meta["name"], parameter, values, trials, curves,
                   meta["config"], meta["schema_version"])


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _json(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


def run_trial(cfg: ExperimentConfig, parameter: str, value, t: int):
    """Run trial ``t`` at one sweep value; returns ``(TrialResult, infidelity curve, trace)``."""
    seed = trial_seed(cfg.seed_base, t)
    start = time.perf_counter()
    try:
        problem = build_problem(cfg)
        u0 = initial_pulse(cfg, problem, seed)
        opt = build_optimizer_config(cfg, problem, parameter, value, rng_seed=seed)
        runner = grape.run if cfg.optimizer.method == "grape" else krotov.run
        trace = runner(problem, u0, opt)
    except (ContractError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        err = f"{type(exc).__name__}: {exc}"
        res = TrialResult(parameter, value, t, seed, float("nan"), 0, "error",
                          time.perf_counter() - start, err)
        return res, None, None
    res = TrialResult(parameter, value, t, seed, float(trace.final_fidelity), trace.n_iterations,
                      trace.termination_reason, time.perf_counter() - start)
    return res, 1 - trace.fidelities, trace


def _job(args):
    cfg, parameter, value, t = args
    res, curve, trace = run_trial(cfg, parameter, value, t)
    pulse = None if trace is None else trace.final_pulse
    return res, curve, pulse


def run_experiment(cfg: ExperimentConfig, workers: int = 1, out_dir=None) -> RunRecord:
    """Run every trial at every sweep value and aggregate a :class:`RunRecord`.

    Trial ``t`` uses seed ``seed_base ^ t`` for its initial pulse and its
    orthogonal sets, at every sweep value. Failed trials are kept in the
    record with their error message. With ``workers > 1`` trials run in a
    process pool; aggregation is keyed by ``(value, trial)`` so the record
    does not depend on completion order. When ``out_dir`` is given the
    record (and, if configured, the final pulses) is written there.
    """
    jobs = [(cfg, p, v, t) for p, v in cfg.sweep_values() for t in range(cfg.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    keyed = {(r.value, r.trial): (r, c, p) for r, c, p in results}
    parameter = cfg.sweep_values()[0][0]
    values = tuple(v for _, v in cfg.sweep_values())
    trials, curves = [], {}
    for v in values:
        cs = []
        for t in range(cfg.trials):
            r, c, _ = keyed[(v, t)]
            trials.append(r)
            if c is not None:
                cs.append(c)
        curves[v] = _mean_curve(cs)
    record = RunRecord(cfg.config_hash(), cfg.name, parameter, values, trials, curves,
                       cfg.canonical())
    if out_dir is not None:
        record.save(out_dir)
        if cfg.export_pulses:
            problem = build_problem(cfg)
            pdir = Path(out_dir) / "pulses"
            pdir.mkdir(exist_ok=True)
            for (v, t), (r, _, p) in sorted(keyed.items()):
                if p is not None:
                    export_pulse(p, problem, pdir / f"{parameter}={_num(v)}_trial{t}.txt")
    return record


def _mean_curve(curves) -> np.ndarray:
    if not curves:
        return np.array([])
    n = max(len(c) for c in curves)
    padded = np.array([np.concatenate([c, np.full(n - len(c), c[-1])]) for c in curves])
    return padded.mean(axis=0)


@dataclass(frozen=True)
class Advantage:
    """``(1 - F(L=0)) / (1 - F(L_best))`` with ``F`` the mean final fidelity.

    ``infinite`` flags the sentinel case of a perfect mean at ``L_best``.
    """

    factor: float
    L_best: int
    fidelity_pull: float
    fidelity_best: float
    infinite: bool = False
    excluded: tuple = ()


def _has_advantage(record: RunRecord) -> bool:
    return record.parameter == "L" and 0 in record.values and any(v >= 1 for v in record.values)


def advantage_factor(record: RunRecord, warn: bool = True) -> Advantage:
    """Advantage factor of an ``L`` sweep; ties in mean fidelity go to the smallest ``L``."""
    if not _has_advantage(record):
        raise ContractError("advantage needs an L sweep containing 0 and some L >= 1")
    f0 = record.mean_fidelity(0)
    if math.isnan(f0):
        raise ContractError("every L=0 trial failed")
    best, f_best, excluded = None, -math.inf, []
    for v in sorted(v for v in record.values if v >= 1):
        f = record.mean_fidelity(v)
        if math.isnan(f):
            excluded.append(v)
            if warn:
                warnings.warn(f"all trials at L={v} failed; excluded from the advantage", RuntimeWarning)
            continue
        if f > f_best:
            best, f_best = v, f
    if best is None:
        raise ContractError("every L >= 1 trial failed")
    if f_best >= 1.0:
        return Advantage(math.inf, best, f0, f_best, True, tuple(excluded))
    return Advantage((1 - f0) / (1 - f_best), best, f0, f_best, False, tuple(excluded))
