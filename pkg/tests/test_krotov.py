from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import random_problem
from oracles import plain_krotov
from pushpull import krotov, systems
from pushpull.errors import ContractError
from pushpull.krotov import (CoSequence, KrotovConfig, back_propagate, co_sequence_update_step,
                             forward_update_step, im_overlaps, terminal_multiplier,
                             terminal_orthogonal_multipliers)
from pushpull.linalg import RngStream, expm_generator, pauli, random_operator
from pushpull.model import ControlProblem, GateTask, StateTask, propagate
from pushpull.orthogonal import generate


def loose_config(**kw):
    """Config stand-in that skips the (0, 1] range checks on delta and eta."""
    base = dict(delta=1.0, eta=1.0, push_weight=0.0, penalties=(1.0,))
    base.update(kw)
    ns = SimpleNamespace(**base)
    ns.penalty_array = lambda m: np.full(m, base["penalties"][0]) if len(base["penalties"]) == 1 \
        else np.asarray(base["penalties"], float)
    return ns


def test_terminal_multiplier_examples():
    u = random_operator(RngStream(0), 4, "unitary")
    assert np.allclose(terminal_multiplier(GateTask(u), u), 4 * u)
    ket0 = np.diag([1.0, 0.0])
    b = terminal_multiplier(StateTask(ket0, ket0), np.eye(2), kappa=0.0)
    assert np.allclose(b, ket0)
    # kappa term alone
    task = SimpleNamespace(kind="state", rho_target=np.zeros((2, 2)), rho_initial=ket0)
    w = random_operator(RngStream(1), 2, "unitary")
    assert np.allclose(terminal_multiplier(task, w, kappa=0.3), 0.3 * w)


def test_terminal_multiplier_traceless_initial_state_is_finite():
    task = systems.lls_task()
    w = random_operator(RngStream(2), 4, "unitary")
    b = terminal_multiplier(task, w, kappa=0.01)
    assert np.all(np.isfinite(b))
    ov = im_overlaps(b, systems.collective_controls(2), w)
    assert np.all(np.isfinite(ov))


def test_terminal_orthogonal_multipliers():
    target = systems.cnot_target()
    oset = generate(target, "gate", 3, RngStream(3))
    c = terminal_orthogonal_multipliers(GateTask(target), target, oset.members)
    assert c.shape == (3, 4, 4)
    assert np.max(np.abs(c)) <= 1e-12
    # 2-dim state example: R orthogonal to the evolved state
    ket0, ket1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    task = StateTask(ket0, ket0)
    r = pauli("x") / np.sqrt(2)
    c = terminal_orthogonal_multipliers(task, np.eye(2), [r], kappa=0.0)[0]
    assert np.isclose(np.trace(c.conj().T @ ket0), np.trace(r @ ket0))
    assert terminal_orthogonal_multipliers(task, np.eye(2), [], 0.0).shape == (0, 2, 2)


def test_back_propagate_examples():
    p = ControlProblem(np.zeros((2, 2)), [pauli("x")], 3, 0.1, GateTask(np.eye(2)))
    b_n = random_operator(RngStream(4), 2)
    out = back_propagate(b_n, CoSequence.from_pulse(np.zeros((3, 1))), p)
    assert out.shape == (4, 2, 2)
    assert all(np.allclose(b, b_n) for b in out)
    assert np.array_equal(out[-1], b_n)


def test_back_propagate_two_segments_and_norms():
    p = random_problem(5, n=2, dt=0.3)
    table = RngStream(5).normal(p.shape)
    b_n = random_operator(RngStream(6), 4)
    out = back_propagate(b_n, table, p)
    u1, u2 = propagate(p, table).segment_props
    assert np.allclose(out[0], u1.conj().T @ u2.conj().T @ b_n)
    assert np.allclose(out[1], u2.conj().T @ b_n)
    for b in out:
        assert abs(np.linalg.norm(b) - np.linalg.norm(b_n)) <= 1e-11


def test_forward_update_delta_zero_carries_co_sequence():
    p = random_problem(7, n=3)
    co = CoSequence.from_pulse(RngStream(7).normal(p.shape))
    b = random_operator(RngStream(8), 4)
    row, props = forward_update_step(p, loose_config(delta=0.0), co, 1, b, np.eye(4))
    assert np.array_equal(row, co.u[1])
    assert np.allclose(props, expm_generator(p.h0 + np.tensordot(row, p.controls, 1), p.dt))


def test_forward_update_plug_in():
    # single control A = sigma_x on a qubit, B chosen so that Im<B|A U> = lambda * c
    p = ControlProblem(np.zeros((2, 2)), [pauli("x")], 1, 0.1, GateTask(np.eye(2)))
    lam, c = 0.5, 1.7
    b = -1j * lam * c / 2 * pauli("x")
    cfg = loose_config(delta=1.0, penalties=(lam,))
    row, _ = forward_update_step(p, cfg, CoSequence.from_pulse(np.zeros((1, 1))), 0, b, np.eye(2))
    assert np.isclose(row[0], c)


def test_forward_update_push_inert_without_weight():
    p = random_problem(9, n=3)
    co = CoSequence.from_pulse(RngStream(9).normal(p.shape), L=2)
    co.v[:] = RngStream(10).normal(co.v.shape)
    b = random_operator(RngStream(11), 4)
    c = np.array([random_operator(RngStream(12, (l,)), 4) for l in range(2)])
    w = random_operator(RngStream(13), 4, "unitary")
    cfg = loose_config(delta=0.4, push_weight=0.0)
    plain, _ = forward_update_step(p, cfg, CoSequence(co.u.copy(), np.zeros(p.shape + (0,))), 0, b, w)
    pushed, _ = forward_update_step(p, cfg, co, 0, b, w, c)
    assert np.array_equal(plain, pushed)


def test_forward_update_push_term():
    p = random_problem(14, n=2)
    co = CoSequence.from_pulse(RngStream(14).normal(p.shape), L=2)
    co.v[:] = RngStream(15).normal(co.v.shape)
    b = random_operator(RngStream(16), 4)
    c = np.array([random_operator(RngStream(17, (l,)), 4) for l in range(2)])
    w = random_operator(RngStream(18), 4, "unitary")
    lam, delta, alpha = 0.3, 0.6, 0.2
    cfg = loose_config(delta=delta, push_weight=alpha, penalties=(lam,))
    row, _ = forward_update_step(p, cfg, co, 1, b, w, c)
    want = (1 - delta) * co.u[1] + delta / lam * im_overlaps(b, p.controls, w)
    for l in range(2):
        want = want + alpha * delta / 2 * (co.v[1, :, l] - im_overlaps(c[l], p.controls, w) / lam)
    assert np.allclose(row, want)


def test_co_sequence_update_examples():
    p = random_problem(19, n=3)
    u = RngStream(19).normal(p.shape)
    b = random_operator(RngStream(20), 4)
    w = random_operator(RngStream(21), 4, "unitary")
    co = CoSequence.from_pulse(np.zeros(p.shape), L=2)
    c = np.array([random_operator(RngStream(22, (l,)), 4) for l in range(2)])
    co_sequence_update_step(p, loose_config(eta=0.0), co, u, 2, b, w, c)
    assert np.array_equal(co.u[2], u[2])
    assert np.array_equal(co.v, np.zeros_like(co.v))


def test_co_sequence_v_formula():
    p = random_problem(23, n=2)
    u = RngStream(23).normal(p.shape)
    b = random_operator(RngStream(24), 4)
    w = random_operator(RngStream(25), 4, "unitary")
    c = np.array([random_operator(RngStream(26, (l,)), 4) for l in range(3)])
    lam, eta, alpha = 0.7, 0.5, 0.3
    co = CoSequence.from_pulse(np.zeros(p.shape), L=3)
    co_sequence_update_step(p, loose_config(eta=eta, push_weight=alpha, penalties=(lam,)), co, u, 0, b, w, c)
    s = sum(im_overlaps(c[l], p.controls, w) for l in range(3))
    want = alpha * eta / 3 * (u[0] - s / lam)
    for l in range(3):
        assert np.allclose(co.v[0, :, l], want)


def test_single_segment_round_trip():
    p = random_problem(27, n=1, dt=0.2)
    u = RngStream(27).normal(p.shape)
    cfg = loose_config(eta=0.5, penalties=(2.0,))
    co = CoSequence.from_pulse(np.zeros(p.shape))
    w = propagate(p, u).total
    b_n = terminal_multiplier(p.task, w)
    b_0, _ = co_sequence_update_step(p, cfg, co, u, 0, b_n, w)
    want_row = 0.5 * u[0] + 0.5 / 2.0 * im_overlaps(b_n, p.controls, w)
    assert np.allclose(co.u[0], want_row)
    u_co = expm_generator(p.h0 + np.tensordot(want_row, p.controls, 1), p.dt)
    assert np.allclose(b_0, u_co.conj().T @ b_n)


def test_config_validation():
    for bad in (dict(delta=0.0), dict(eta=1.5), dict(penalties=(0.0,)), dict(kappa=-1.0),
                dict(push_weight=-2.0), dict(orthogonal_L=-1)):
        with pytest.raises(ContractError):
            KrotovConfig(**bad)
    cfg = KrotovConfig(penalties=(1e-3,))
    assert np.array_equal(cfg.penalty_array(3), np.full(3, 1e-3))
    with pytest.raises(ContractError):
        KrotovConfig(penalties=(1.0, 2.0)).penalty_array(3)


def test_trivial_problem_reaches_goal_immediately():
    p = ControlProblem(np.zeros((2, 2)), [pauli("x")], 2, 1e-3, GateTask(np.eye(2)))
    tr = krotov.run(p, np.zeros((2, 1)), KrotovConfig())
    assert tr.termination_reason == "goal_reached" and tr.n_iterations == 0


def ising_small(task="gate"):
    p = systems.ising_two_qubit(100.0, n_segments=8, dt=2.5e-4)
    return p if task == "gate" else p.with_task(systems.singlet_task())


@pytest.mark.parametrize("task", ["gate", "state"])
def test_matches_plain_oracle(task):
    p = ising_small(task)
    guess = RngStream(1).uniform(-2e3, 2e3, p.shape)
    lam, delta, eta, kappa = 3e-3, 0.7, 0.6, 0.01
    kw = dict(target=p.task.target) if task == "gate" else dict(rho0=p.task.rho_initial, rho_t=p.task.rho_target)
    hist = plain_krotov(p.h0, p.controls, p.dt, guess, [lam] * 4, delta, eta, kappa, 6, **kw)
    for k in (1, 6):
        cfg = KrotovConfig(delta=delta, eta=eta, kappa=kappa, penalties=(lam,), max_iterations=k,
                           fidelity_goal=1.0)
        u = krotov.run(p, guess, cfg).final_pulse
        assert np.max(np.abs(u - hist[k - 1])) <= 1e-12 * np.max(np.abs(hist[k - 1]))


def test_improves_cnot():
    p = systems.ising_two_qubit(100.0, n_segments=50, dt=1e-4)
    guess = RngStream(2).uniform(-2e3, 2e3, p.shape)
    cfg = KrotovConfig(delta=0.1, eta=0.1, penalties=(3e-4,), max_iterations=40, fidelity_goal=1.0)
    tr = krotov.run(p, guess, cfg)
    assert tr.final_fidelity > tr.fidelities[0] + 0.3


@pytest.mark.parametrize("task", ["gate", "state"])
def test_alpha_zero_is_pull_only(task):
    p = ising_small(task)
    guess = RngStream(3).uniform(-2e3, 2e3, p.shape)
    base = KrotovConfig(penalties=(3e-3,), delta=0.5, eta=0.5, max_iterations=8, fidelity_goal=1.0, rng_seed=3)
    a = krotov.run(p, guess, base)
    b = krotov.run(p, guess, replace(base, orthogonal_L=3, push_weight=0.0))
    assert np.array_equal(a.final_pulse, b.final_pulse)
    assert a.fidelities.tolist() == b.fidelities.tolist()
    assert a.column("objective").tolist() == b.column("objective").tolist()


def test_determinism_with_push():
    p = ising_small("state")
    guess = RngStream(4).uniform(-2e3, 2e3, p.shape)
    cfg = KrotovConfig(penalties=(3e-3,), delta=0.5, eta=0.5, max_iterations=6, fidelity_goal=1.0,
                       orthogonal_L=2, push_weight=0.2, refresh_policy="per_iteration", rng_seed=4)
    assert krotov.run(p, guess, cfg).deterministic_view() == krotov.run(p, guess, cfg).deterministic_view()


def test_unit_ensemble_is_plain_run():
    p = ising_small("gate")
    guess = RngStream(5).uniform(-2e3, 2e3, p.shape)
    cfg = KrotovConfig(penalties=(3e-3,), delta=0.5, eta=0.5, max_iterations=4, fidelity_goal=1.0)
    a = krotov.run(p, guess, cfg)
    b = krotov.run(p, guess, replace(cfg, rf_scales=(1.0, 1.0), rf_weights=(0.5, 0.5)))
    assert np.allclose(a.final_pulse, b.final_pulse, rtol=0, atol=1e-9 * np.max(np.abs(a.final_pulse)))


def test_trace_fields():
    p = ising_small("gate")
    guess = RngStream(6).uniform(-2e3, 2e3, p.shape)
    tr = krotov.run(p, guess, KrotovConfig(penalties=(3e-3,), max_iterations=3, fidelity_goal=1.0))
    assert tr.column("iteration").tolist() == [0, 1, 2, 3]
    assert tr.termination_reason == "max_iterations"
    assert np.all(tr.column("gradient_norm")[1:] > 0)
