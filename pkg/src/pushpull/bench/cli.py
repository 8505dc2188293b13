"""Benchmark command line: ``python -m pushpull.bench <command> --config FILE``.

Exit codes: 0 success, 1 config error, 2 every trial failed, 3 some trials
failed.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from ..errors import ConfigError, ContractError, PulseFormatError
from .config import ExperimentConfig, build_problem, load_config
from .profile import rf_profile
from .pulsefile import export_pulse, import_pulse
from .runner import RunRecord, advantage_factor, run_experiment, run_trial

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_CONFIG, EXIT_FAILED, EXIT_PARTIAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="python -m pushpull.bench",
                                     description="Push-pull optimal control benchmarks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--out", help="output directory (default: [output] dir)")
    common.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    common.add_argument("--seed", type=int, help="override seed_base")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", parents=[common], help="single optimization run")
    sub.add_parser("sweep", parents=[common], help="L or alpha sweep over all trials")
    sub.add_parser("profile", parents=[common], help="RF-inhomogeneity profile of a pulse")
    adv = sub.add_parser("advantage", parents=[common], help="advantage factor of a sweep record")
    adv.add_argument("record", nargs="?", help="record directory (default: --out)")
    sub.add_parser("validate-config", parents=[common], help="check a config file")
    return parser


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args, cfg) -> Path:
    return Path(args.out if args.out else cfg.output_dir)


def _status(record) -> int:
    if record.n_failed == len(record.trials):
        return EXIT_FAILED
    return EXIT_PARTIAL if record.n_failed else EXIT_OK


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _optimize(args, cfg):
    out = _out(args, cfg)
    single = replace(cfg, sweep=None, trials=1)
    parameter, value = single.sweep_values()[0]
    res, _, trace = run_trial(single, parameter, value, 0)
    out.mkdir(parents=True, exist_ok=True)
    if trace is None:
        print(f"trial failed: {res.error}", file=sys.stderr)
        return EXIT_FAILED, None
    export_pulse(trace.final_pulse, build_problem(cfg), out / "pulse.txt")
    rows = ["iteration,fidelity,push_fidelity,objective,gradient_norm,elapsed"]
    rows += [",".join(repr(float(getattr(r, k))) if k != "iteration" else str(r.iteration)
                      for k in ("iteration", "fidelity", "push_fidelity", "objective",
                                "gradient_norm", "elapsed")) for r in trace.records]
    (out / "trace.csv").write_text("\n".join(rows) + "\n")
    summary = {"config_hash": cfg.config_hash(), "seed": res.seed, "final_fidelity": res.final_fidelity,
               "iterations": res.iterations, "termination": res.termination}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _say(args, f"{cfg.name}: F={res.final_fidelity:.6f} after {res.iterations} iterations "
               f"({res.termination}); pulse written to {out / 'pulse.txt'}")
    return EXIT_OK, trace.final_pulse


def _sweep(args, cfg):
    if cfg.sweep is None:
        raise ConfigError("config has no [sweep] section", path=cfg.source)
    out = _out(args, cfg)
    record = run_experiment(cfg, workers=args.workers, out_dir=out)
    for v in record.values:
        n_ok = sum(not t.failed for t in record.by_value(v))
        _say(args, f"{record.parameter}={v}: mean F={record.mean_fidelity(v):.6f} "
                   f"({n_ok}/{cfg.trials} trials ok)")
    if record.parameter == "L" and 0 in record.values and any(v >= 1 for v in record.values):
        try:
            adv = _checked_advantage(record)
            _say(args, f"advantage factor {adv.factor:.4g} at L_best={adv.L_best}")
        except ContractError as exc:
            _say(args, f"no advantage factor: {exc}")
    _say(args, f"record written to {out}")
    return _status(record)


def _profile(args, cfg):
    out = _out(args, cfg)
    problem = build_problem(cfg)
    if cfg.profile_pulse:
        path = Path(cfg.profile_pulse)
        if not path.is_absolute() and cfg.source:
            path = Path(cfg.source).parent / path
        try:
            pulse, _ = import_pulse(path, expect=problem)
        except (OSError, PulseFormatError) as exc:
            raise ConfigError(f"cannot use profile pulse: {exc}", path=cfg.source) from None
    else:
        code, pulse = _optimize(args, cfg)
        if pulse is None:
            return code
    prof = rf_profile(problem, pulse, cfg.profile_scales)
    out.mkdir(parents=True, exist_ok=True)
    (out / "profile.csv").write_text(prof.to_csv())
    for s, f in zip(prof.scales, prof.final):
        _say(args, f"scale {s:g}: F={f:.6f}")
    _say(args, f"mean over scales: {prof.final.mean():.6f}")
    return EXIT_OK


def _checked_advantage(record):
    # excluded sweep values are reported on stderr
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            return advantage_factor(record)
        finally:
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)


def _advantage(args):
    path = args.record or args.out
    if not path:
        raise ConfigError("give a record directory or --out")
    try:
        record = RunRecord.load(path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read record {path}: {exc}") from None
    try:
        adv = _checked_advantage(record)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    factor = "inf" if adv.infinite else f"{adv.factor:.6g}"
    print(f"advantage={factor} L_best={adv.L_best} F(L=0)={adv.fidelity_pull:.6f} "
          f"F(L_best)={adv.fidelity_best:.6f}")
    return EXIT_PARTIAL if adv.excluded else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "advantage":
            return _advantage(args)
        cfg = _load(args)
        if args.command == "validate-config":
            _say(args, f"{args.config}: ok (hash {cfg.config_hash()[:12]})")
            return EXIT_OK
        if args.command == "optimize":
            return _optimize(args, cfg)[0]
        if args.command == "sweep":
            return _sweep(args, cfg)
        return _profile(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
