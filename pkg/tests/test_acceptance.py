"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE, random_problem
from oracles import central_difference, plain_krotov
from pushpull import grape, krotov, model, systems
from pushpull.bench.config import SweepSpec, build_problem, initial_pulse, load_config
from pushpull.bench.profile import rf_profile
from pushpull.bench.pulsefile import export_pulse, import_pulse
from pushpull.bench.runner import advantage_factor, run_experiment, run_trial
from pushpull.grape import GrapeConfig, target_gradients
from pushpull.krotov import KrotovConfig
from pushpull.linalg import RngStream, random_operator
from pushpull.model import final_fidelity, propagate, push_fidelity
from pushpull.orthogonal import ORTHOGONALITY_RTOL, generate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def report(number, name, ok, detail, elapsed=None, limit=None):
    if limit is not None:
        ok = ok and elapsed < limit
        detail += f"; {elapsed:.1f} s (limit {limit:g} s)"
    ACCEPTANCE[number] = (ok, f"criterion {number} {name}: {detail}")
    assert ok, detail


def config(name, **optimizer):
    cfg = load_config(CONFIGS / name)
    if optimizer:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, **optimizer))
    return cfg


def ising_fd_problem(seed, kind, ht):
    """Random two-qubit Ising problem, random target, ``max ||H_j|| tau = ht``."""
    r = np.random.default_rng(seed)
    j, o1, o2 = r.uniform(-1, 1, 3) / (2 * np.pi)
    u = r.uniform(-1, 1, (16, 4))
    p = systems.ising_two_qubit(j, (o1, o2), n_segments=16, dt=1.0)
    p = p.with_task(random_problem(seed, kind=kind).task)
    hn = max(np.linalg.norm(model.segment_hamiltonian(p, u, s), 2) for s in range(16))
    return p.with_task(p.task, dt=ht / hn), u


def fd_discrepancy(p, u):
    g = target_gradients(propagate(p, u), p)[0]
    fd = central_difference(lambda x: final_fidelity(p, propagate(p, x)), u, h=1e-6)
    return np.max(np.abs(g - fd)) / np.max(np.abs(fd)), np.max(np.abs(g - fd))


def test_criterion_1_gradient_oracle():
    start = time.perf_counter()
    ok, parts = True, []
    for kind in ("gate", "state"):
        rels, ratios = [], []
        for seed in range(5):
            p, u = ising_fd_problem(seed, kind, 5e-4)
            rel, d1 = fd_discrepancy(p, u)
            _, d2 = fd_discrepancy(p.with_task(p.task, dt=p.dt / 2), u)
            rels.append(rel)
            ratios.append(d1 / d2)
        ok &= max(rels) <= 1e-3 and 3 <= min(ratios) and max(ratios) <= 5
        parts.append(f"{kind} max rel={max(rels):.2e} halving ratios {min(ratios):.2f}..{max(ratios):.2f}")
    report(1, "gradient oracle", ok, ", ".join(parts), time.perf_counter() - start, 10)


def test_criterion_2_orthogonality_inertness():
    start = time.perf_counter()
    worst_orth, worst_push = {"gate": 0.0, "state": 0.0}, {"gate": 0.0, "state": 0.0}
    for seed in range(100):
        for d in (2, 4, 8):
            L = min(15, d * d - 1)
            rng = RngStream(seed, (d,))
            targets = {"gate": random_operator(rng.substream(0), d, "unitary")}
            psi = rng.substream(1).normal(d) + 1j * rng.substream(2).normal(d)
            psi /= np.linalg.norm(psi)
            targets["state"] = np.outer(psi, psi.conj())
            for kind, t in targets.items():
                oset = generate(t, kind, L, rng.substream(3, kind == "state"))
                for m in oset.members:
                    rel = abs(np.vdot(t, m)) / (np.linalg.norm(t) * np.linalg.norm(m))
                    worst_orth[kind] = max(worst_orth[kind], rel)
                worst_push[kind] = max(worst_push[kind], push_fidelity(t, oset, kind, target=t))
    ok = max(worst_orth.values()) <= ORTHOGONALITY_RTOL and max(worst_push.values()) <= 1e-18
    detail = ", ".join(f"{k} max rel overlap={worst_orth[k]:.1e} max push F={worst_push[k]:.1e}"
                       for k in ("gate", "state"))
    report(2, "orthogonality inertness", ok, detail, time.perf_counter() - start, 5)


def test_criterion_3_pull_only_reduction():
    ok, parts = True, []
    for name in ("cnot_grape.ini", "singlet_grape.ini", "cnot_krotov.ini", "singlet_krotov.ini"):
        cfg = config(name, iterations=50)
        problem = build_problem(cfg)
        u0 = initial_pulse(cfg, problem, 7)
        runner = grape.run if cfg.optimizer.method == "grape" else krotov.run
        base = (GrapeConfig(step_size=cfg.optimizer.step_size, max_iterations=50, fidelity_goal=1.0,
                            rng_seed=7)
                if cfg.optimizer.method == "grape" else
                KrotovConfig(delta=cfg.optimizer.delta, eta=cfg.optimizer.eta, kappa=cfg.optimizer.kappa,
                             penalties=(cfg.optimizer.penalty,), max_iterations=50, fidelity_goal=1.0,
                             rng_seed=7))
        a = runner(problem, u0, base)
        b = runner(problem, u0, replace(base, orthogonal_L=5, push_weight=0.0,
                                        refresh_policy=cfg.optimizer.refresh))
        same = a.deterministic_view(("elapsed", "push_fidelity")) == \
            b.deterministic_view(("elapsed", "push_fidelity"))
        ok &= same and a.n_iterations == 50
        parts.append(f"{name[:-4]} {'identical' if same else 'differs'}")
    report(3, "pull-only reduction", ok, ", ".join(parts))


def test_criterion_4_monotonic_grape():
    cfg = config("cnot_grape.ini", iterations=200)
    problem = build_problem(cfg)
    worst, n_bad = 0.0, 0
    for seed in range(10):
        tr = grape.run(problem, initial_pulse(cfg, problem, seed),
                       GrapeConfig(step_size=cfg.optimizer.step_size, max_iterations=200,
                                   fidelity_goal=1.0, stall_window=10**6))
        drops = -np.diff(tr.fidelities)
        worst = max(worst, drops.max(initial=0.0))
        n_bad += bool(np.any(drops > 0))
    report(4, "monotonic GRAPE", n_bad == 0, f"{10 - n_bad}/10 seeds non-decreasing, worst drop {worst:.1e}")


def test_criterion_5_push_pull_advantage():
    start = time.perf_counter()
    wins, parts = 0, []
    for name in ("cnot_grape.ini", "cnot_krotov.ini", "singlet_grape.ini", "singlet_krotov.ini"):
        cfg = replace(config(name, iterations=300, push_weight=0.2), trials=20,
                      sweep=SweepSpec("L", (0, 5)))
        adv = advantage_factor(run_experiment(cfg))
        wins += adv.factor > 1
        parts.append(f"{name[:-4]}={adv.factor:.3f}")
    report(5, "push-pull advantage", wins >= 3, f"{wins}/4 combos > 1 ({', '.join(parts)})",
           time.perf_counter() - start, 15 * 60)


def test_criterion_6_qft_smoke():
    start = time.perf_counter()
    ok, parts = True, []
    for name in ("qft2_krotov.ini", "qft3_krotov.ini"):
        cfg = replace(config(name, push_weight=0.2), trials=10, sweep=SweepSpec("L", (0, 1)))
        record = run_experiment(cfg)
        pull, push = 1 - record.mean_fidelity(0), 1 - record.mean_fidelity(1)
        ok &= push <= pull
        parts.append(f"{name[:-4]} pull={pull:.3e} push={push:.3e}")
    report(6, "QFT smoke", ok, ", ".join(parts), time.perf_counter() - start, 20 * 60)


def test_criterion_7_lls_pulse():
    start = time.perf_counter()
    cfg = config("lls_tcp.ini")
    s = cfg.system
    assert (s.delta_nu_hz, s.j_hz, s.segments, s.duration_s) == (127.6, 8.8, 1000, 45e-3)
    assert cfg.optimizer.orthogonal_L >= 1 and cfg.optimizer.push_weight > 0
    problem = build_problem(cfg)
    res, _, tr = run_trial(cfg, "L", cfg.optimizer.orthogonal_L, 0)
    prof = rf_profile(problem, tr.final_pulse, (0.95, 1.0, 1.05))
    ens = model.ensemble_performance(problem, tr.final_pulse, (0.95, 1.0, 1.05)).fidelity
    nominal = model.state_fidelity(model.evolve_state(propagate(problem, tr.final_pulse),
                                                      problem.task.rho_initial, problem.n_segments),
                                   problem.task.rho_target, problem.task.target_norm)
    lls_ok = nominal >= 0.95 and ens >= 0.95 and np.isclose(prof.final.mean(), ens, rtol=1e-12)
    t = systems.standard_lls_duration(s.delta_nu_hz, s.j_hz)
    sig3 = float(f"{t * 1e3:.3g}")
    duration_ok = sig3 == 63.0
    report(7, "LLS pulse design", lls_ok and duration_ok,
           f"nominal F={nominal:.4f}, ensemble F={ens:.4f}, standard sequence {t * 1e3:.3f} ms "
           f"-> {sig3:g} ms at 3 s.f. vs 63.0", time.perf_counter() - start, 30 * 60)


def test_criterion_8_determinism_round_trip(tmp_path):
    cfg = replace(config("cnot_grape.ini", iterations=20), trials=3)
    a, b = run_experiment(cfg), run_experiment(cfg, out_dir=tmp_path / "rec")
    same_record = a.deterministic_view() == b.deterministic_view()
    rng = np.random.default_rng(0)
    pulse = np.concatenate([rng.normal(0, 1e4, (40, 4)),
                            [[np.nextafter(0.0, 1.0), -0.0, 1e308, -1 / 3]]])
    problem = systems.ising_two_qubit(100.0, n_segments=41, dt=1e-4)
    export_pulse(pulse, problem, tmp_path / "p.txt")
    back, _ = import_pulse(tmp_path / "p.txt", expect=problem)
    lossless = back.tobytes() == pulse.tobytes()
    report(8, "determinism and round trips", same_record and lossless,
           f"records {'identical' if same_record else 'differ'}, pulse round trip "
           f"{'bitwise lossless' if lossless else 'lossy'}")


def test_criterion_9_plain_krotov_oracle():
    worst = {}
    for kind in ("gate", "state"):
        p = random_problem(21, d=4, m=2, n=8, dt=0.2, kind=kind)
        guess = RngStream(22).uniform(-1, 1, p.shape)
        lam, delta, eta, kappa = 2.0, 0.7, 0.6, 0.01
        kw = (dict(target=p.task.target) if kind == "gate"
              else dict(rho0=p.task.rho_initial, rho_t=p.task.rho_target))
        hist = plain_krotov(p.h0, p.controls, p.dt, guess, [lam] * 2, delta, eta, kappa, 20, **kw)
        tr = krotov.run(p, guess, KrotovConfig(delta=delta, eta=eta, kappa=kappa, penalties=(lam,),
                                               max_iterations=20, fidelity_goal=1.0,
                                               stall_window=10**6))
        assert tr.n_iterations == 20
        worst[kind] = np.max(np.abs(tr.final_pulse - hist[-1]))
    ok = max(worst.values()) <= 1e-12
    report(9, "plain Krotov oracle", ok,
           ", ".join(f"{k} max |du|={v:.1e}" for k, v in worst.items()))
