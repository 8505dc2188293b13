"""GRAPE and push-pull GRAPE.

First-order analytic gradients of the normalized gate and state fidelities,
their push-pull combination, and a fixed-step ascent loop with a
step-halving safeguard.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import orthogonal
from .errors import ContractError, NumericalConsistencyError
from .linalg import RngStream, dag
from .model import ControlProblem, PropagatorCache, Performance, check_pulse, performance, propagate
from .trace import OptimizationTrace

__all__ = ["GrapeConfig", "grad_gate", "grad_state", "pp_gradient", "target_gradients", "run"]

IMAG_DISCARD = 1e-12
IMAG_FAIL = 1e-9


@dataclass(frozen=True)
class GrapeConfig:
    step_size: float
    max_iterations: int = 500
    fidelity_goal: float = 0.9999
    push_weight: float = 0.0
    penalties: tuple | None = None
    orthogonal_L: int = 0
    candidate_kind: str | None = None
    refresh_policy: str = "fixed"
    rng_seed: int = 0
    rf_scales: tuple = (1.0,)
    rf_weights: tuple | None = None
    max_halvings: int = 20
    stall_window: int = 50
    stall_tol: float = 1e-12
    record_gradients: bool = False

    def __post_init__(self):
        if not self.step_size > 0:
            raise ContractError("step_size must be positive")
        if not 0 < self.fidelity_goal <= 1:
            raise ContractError("fidelity_goal must lie in (0, 1]")
        if not -1 <= self.push_weight <= 1:
            raise ContractError("push_weight must lie in [-1, 1]")
        if self.orthogonal_L < 0:
            raise ContractError("orthogonal_L must be >= 0")
        if self.max_iterations < 0:
            raise ContractError("max_iterations must be >= 0")
        if self.penalties is not None and any(p < 0 for p in self.penalties):
            raise ContractError("penalties must be non-negative")
        if not self.rf_scales or any(s <= 0 for s in self.rf_scales):
            raise ContractError("rf_scales must be non-empty and positive")


def _components(cache: PropagatorCache, controls: np.ndarray) -> np.ndarray:
    # M_sk = U_{s+2:N} A_k U_{1:s+1}, shape (N, M, d, d)
    fwd = cache.forward[1:]
    bwd = cache.backward[1:]
    return np.einsum("sab,kbc,scd->skad", bwd, controls, fwd, optimize=True)


def grad_gate(cache: PropagatorCache, problem: ControlProblem, target=None,
              components: np.ndarray | None = None) -> np.ndarray:
    """Gradient of ``|Tr{V^dagger U_{1:N}}|^2 / d^2`` w.r.t. every ``u_jk``.

    ``V`` defaults to the problem's gate target; any fixed matrix (such as
    an orthogonal-set member) may be substituted. Uses the first-order
    segment derivative ``dU_j/du_jk = -i dt A_k U_j``.
    """
    if target is None:
        target = problem.task.target
    target = np.asarray(target)
    if components is None:
        components = _components(cache, problem.controls)
    d = problem.dim
    z = np.vdot(target, cache.total)
    overlaps = np.einsum("ab,skab->sk", target.conj(), components)
    return (2 * problem.dt / d**2) * np.imag(overlaps * np.conj(z))


def _state_components(cache: PropagatorCache, problem: ControlProblem, rho0) -> np.ndarray:
    # K_sk = U_{s+2:N} [A_k, rho_{1:s+1}] U_{s+2:N}^dagger
    fwd = cache.forward[1:]
    bwd = cache.backward[1:]
    rho = fwd @ rho0 @ dag(fwd)
    a = problem.controls
    comm = np.einsum("kab,sbc->skac", a, rho) - np.einsum("sab,kbc->skac", rho, a)
    return np.einsum("sab,skbc,sdc->skad", bwd, comm, bwd.conj(), optimize=True)


def grad_state(cache: PropagatorCache, problem: ControlProblem, rho0=None, rho_target=None,
               norm: float | None = None, components: np.ndarray | None = None) -> np.ndarray:
    """Gradient of ``Tr{rho_t rho_{1:N}} / norm`` w.r.t. every ``u_jk``.

    ``norm`` defaults to ``Tr{rho_t^2}`` of the problem's own target, so that
    orthogonal operators placed in ``rho_target`` share the pull term's scale.
    """
    task = problem.task
    if rho0 is None:
        rho0 = task.rho_initial
    if rho_target is None:
        rho_target = task.rho_target
    if norm is None:
        norm = task.target_norm
    if components is None:
        components = _state_components(cache, problem, np.asarray(rho0))
    # -i Tr{rho~ [A, rho]} = Im Tr{rho_t K}; its real part must vanish
    x = np.einsum("ab,skba->sk", np.asarray(rho_target), components) * (problem.dt / norm)
    residue = np.max(np.abs(x.real)) if x.size else 0.0
    if residue > IMAG_FAIL:
        raise NumericalConsistencyError(f"state gradient has imaginary residue {residue:.3g}")
    return x.imag.copy()


def pp_gradient(g_target: np.ndarray, g_orthogonals, alpha: float) -> np.ndarray:
    """``G = g(target) - (alpha / L) sum_l g(orthogonal_l)``."""
    if len(g_orthogonals) == 0:
        return np.array(g_target, copy=True)
    return g_target - (alpha / len(g_orthogonals)) * np.sum(g_orthogonals, axis=0)


def target_gradients(cache, problem, members=()):
    """Pull gradient and one push gradient per orthogonal member, sharing one cache."""
    if problem.task.kind == "gate":
        comps = _components(cache, problem.controls)
        g = grad_gate(cache, problem, components=comps)
        gs = [grad_gate(cache, problem, v, components=comps) for v in members]
    else:
        comps = _state_components(cache, problem, problem.task.rho_initial)
        g = grad_state(cache, problem, components=comps)
        gs = [grad_state(cache, problem, rho_target=r, components=comps) for r in members]
    return g, gs


class _Ensemble:
    """Performance and gradients averaged over RF amplitude scales."""

    def __init__(self, problem, config):
        self.problem = problem
        self.scales = np.asarray(config.rf_scales, dtype=float)
        if config.rf_weights is None:
            self.weights = np.full(len(self.scales), 1.0 / len(self.scales))
        else:
            self.weights = np.asarray(config.rf_weights, dtype=float)
            if self.weights.shape != self.scales.shape or abs(self.weights.sum() - 1) > 1e-12:
                raise ContractError("rf_weights must match rf_scales and sum to 1")
        pen = config.penalties
        self.penalties = np.zeros(problem.n_controls) if pen is None else np.asarray(pen, float)
        if self.penalties.shape != (problem.n_controls,):
            raise ContractError("need one penalty per control")
        self.alpha = config.push_weight

    def evaluate(self, u, oset):
        caches = [propagate(self.problem, u, s) for s in self.scales]
        perfs = [performance(self.problem, s * u, self.penalties, self.alpha, oset, cache=c)
                 for s, c in zip(self.scales, caches)]
        rows = np.array([[p.objective, p.fidelity, p.push_fidelity, p.penalty] for p in perfs])
        return Performance(*(float(x) for x in self.weights @ rows)), caches

    def gradient(self, u, caches, oset):
        members = () if oset is None else oset.members
        pull = np.zeros_like(u)
        push = np.zeros_like(u)
        total = np.zeros_like(u)
        for s, w, c in zip(self.scales, self.weights, caches):
            g, gs = target_gradients(c, self.problem, members)
            pull += (w * s) * g
            if gs:
                push += (w * s) * np.mean(gs, axis=0)
            total += (w * s) * pp_gradient(g, gs, self.alpha)
        total -= 2 * self.penalties * u * float(self.weights @ self.scales**2)
        return total, pull, push


def run(problem: ControlProblem, initial_pulse, config: GrapeConfig) -> OptimizationTrace:
    """Optimize ``initial_pulse`` by (push-pull) gradient ascent.

    Each iteration steps ``u += eps * G``. If the push-pull performance would
    decrease, ``eps`` is halved (at most ``config.max_halvings`` times) and
    the step is skipped when no trial improves it; ``eps`` is reset every
    iteration. A ``per_iteration`` orthogonal set is regenerated after each
    step.
    """
    start = time.perf_counter()
    u = check_pulse(problem, initial_pulse).copy()
    ens = _Ensemble(problem, config)
    rng = RngStream(config.rng_seed).substream(1)
    oset = None
    if config.orthogonal_L > 0:
        oset = orthogonal.generate(problem.task.target, problem.task.kind, config.orthogonal_L,
                                   rng.substream(0), config.candidate_kind, config.refresh_policy)
    perf, caches = ens.evaluate(u, oset)
    trace = OptimizationTrace()
    quiet = 0
    i = 0
    while True:
        grad, pull, push = ens.gradient(u, caches, oset)
        trace.append(iteration=i, fidelity=perf.fidelity, push_fidelity=perf.push_fidelity,
                     objective=perf.objective, gradient_norm=float(np.linalg.norm(grad)),
                     elapsed=time.perf_counter() - start)
        if config.record_gradients:
            trace.diagnostics.append({"pull": pull, "push": push, "total": grad, "pulse": u.copy()})
        if perf.fidelity >= config.fidelity_goal:
            trace.termination_reason = "goal_reached"
            break
        if i >= config.max_iterations:
            trace.termination_reason = "max_iterations"
            break
        if quiet >= config.stall_window:
            trace.termination_reason = "stalled"
            break
        eps = config.step_size
        previous = perf.objective
        for _ in range(config.max_halvings + 1):
            trial = u + eps * grad
            trial_perf, trial_caches = ens.evaluate(trial, oset)
            if trial_perf.objective >= perf.objective:
                u, perf, caches = trial, trial_perf, trial_caches
                break
            eps /= 2
        i += 1
        if oset is not None and config.refresh_policy == "per_iteration":
            oset = orthogonal.refresh(oset, problem.task.target, rng.substream(i))
            perf, caches = ens.evaluate(u, oset)
        quiet = quiet + 1 if abs(perf.objective - previous) < config.stall_tol else 0
    trace.final_pulse = u
    return trace
