"""Krotov and push-pull Krotov optimization.

Each iteration runs a forward sweep that rebuilds the control sequence
segment by segment from the Lagrange multipliers of the previous iteration,
then a backward sweep that rebuilds the co-sequence and back-propagates the
multipliers with it. Updates are sequential (each segment sees the
propagators already updated in the same sweep).

RF inhomogeneity is handled by optimizing an ensemble of systems whose
control amplitudes are scaled by ``rf_scales``; overlaps entering the
updates are the weighted ensemble averages. A single unit scale reproduces
the plain algorithm exactly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import orthogonal
from .errors import ContractError
from .linalg import RngStream, dag, expm_generator
from .model import ControlProblem, Performance, check_pulse, gate_fidelity, push_fidelity, state_fidelity
from .trace import OptimizationTrace

__all__ = [
    "KrotovConfig",
    "CoSequence",
    "terminal_multiplier",
    "terminal_orthogonal_multipliers",
    "back_propagate",
    "im_overlaps",
    "forward_update_step",
    "co_sequence_update_step",
    "run",
]


@dataclass(frozen=True)
class KrotovConfig:
    delta: float = 1.0
    eta: float = 1.0
    kappa: float = 0.01
    penalties: tuple = (1e-4,)
    push_weight: float = 0.0
    orthogonal_L: int = 0
    candidate_kind: str | None = None
    refresh_policy: str = "fixed"
    max_iterations: int = 500
    fidelity_goal: float = 0.9999
    rng_seed: int = 0
    rf_scales: tuple = (1.0,)
    rf_weights: tuple | None = None
    stall_window: int = 50
    stall_tol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.delta <= 1 or not 0 < self.eta <= 1:
            raise ContractError("delta and eta must lie in (0, 1]")
        if self.kappa < 0:
            raise ContractError("kappa must be non-negative")
        if any(not p > 0 for p in self.penalties):
            raise ContractError("Krotov penalties must be strictly positive")
        if not -1 <= self.push_weight <= 1:
            raise ContractError("push_weight must lie in [-1, 1]")
        if self.orthogonal_L < 0 or self.max_iterations < 0:
            raise ContractError("orthogonal_L and max_iterations must be >= 0")
        if not self.rf_scales or any(s <= 0 for s in self.rf_scales):
            raise ContractError("rf_scales must be non-empty and positive")

    def penalty_array(self, n_controls: int) -> np.ndarray:
        lam = np.asarray(self.penalties, dtype=float)
        if lam.size == 1:
            lam = np.full(n_controls, lam.item())
        if lam.shape != (n_controls,):
            raise ContractError("need one penalty per control (or a single shared value)")
        return lam


@dataclass
class CoSequence:
    """Co-sequence ``u~`` (N x M) and push co-amplitudes ``v~`` (N x M x L)."""

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_pulse(cls, pulse, L: int = 0) -> "CoSequence":
        u = np.array(pulse, dtype=float)
        return cls(u, np.zeros(u.shape + (L,)))


def terminal_multiplier(task, u_total, kappa: float = 0.0) -> np.ndarray:
    """Boundary multiplier ``B_N``.

    Gate: ``<U_t|U_{0:N}> U_t``. State: ``rho_t U_{0:N} rho_0 + kappa U_{0:N}``.
    """
    u_total = np.asarray(u_total)
    if task.kind == "gate":
        return np.vdot(task.target, u_total) * task.target
    return task.rho_target @ u_total @ task.rho_initial + kappa * u_total


def terminal_orthogonal_multipliers(task, u_total, members, kappa: float = 0.0) -> np.ndarray:
    """Boundary multipliers ``C_Nl``, one per orthogonal operator, shape ``(L, d, d)``."""
    u_total = np.asarray(u_total)
    out = []
    for m in members:
        if task.kind == "gate":
            out.append(np.vdot(m, u_total) * m)
        else:
            out.append(m @ u_total @ task.rho_initial + kappa * u_total)
    d = u_total.shape[-1]
    return np.array(out, dtype=complex).reshape(len(out), d, d)


def _segment_props(problem, rows, scale=1.0):
    rows = np.atleast_2d(rows)
    h = problem.h0 + np.tensordot(scale * rows, problem.controls, axes=(1, 0))
    return expm_generator(h, problem.dt)


def back_propagate(b_terminal, co_sequence, problem: ControlProblem, scale: float = 1.0) -> np.ndarray:
    """``B_j = U~_{j+1}^dagger ... U~_N^dagger B_N`` for ``j = 0..N``.

    ``co_sequence`` is a :class:`CoSequence` or an ``(N, M)`` table. Index
    ``j`` of the result is the multiplier after ``j`` segments, so
    ``result[N]`` is ``b_terminal`` itself. ``b_terminal`` may carry leading
    axes (e.g. one per orthogonal operator).
    """
    table = getattr(co_sequence, "u", co_sequence)
    table = check_pulse(problem, table)
    props = _segment_props(problem, table, scale)
    b = np.asarray(b_terminal, dtype=complex)
    out = np.empty((problem.n_segments + 1,) + b.shape, dtype=complex)
    out[-1] = b
    for j in range(problem.n_segments - 1, -1, -1):
        out[j] = dag(props[j]) @ out[j + 1]
    return out


def im_overlaps(b, controls, u) -> np.ndarray:
    """``Im <b|A_k u>`` for every control; ``b`` may be a stack ``(..., d, d)``."""
    x = np.asarray(u) @ dag(np.asarray(b))
    return np.einsum("kab,...ba->...k", controls, x).imag


def _ensemble_overlap(b, controls, u, scales, weights):
    # b, u: (n_members, ..., d, d); weighted sum of s_m Im<b_m|A_k u_m>
    total = 0.0
    for m in range(len(scales)):
        total = total + (weights[m] * scales[m]) * im_overlaps(b[m], controls, u[m])
    return total


def forward_update_step(problem: ControlProblem, config: KrotovConfig, co_sequence: CoSequence,
                        j: int, b_j, u_prev, c_j=None, scales=(1.0,), weights=(1.0,)):
    """New amplitudes of 0-based segment ``j`` and its propagator(s).

    ``b_j`` is the multiplier after segment ``j`` from the previous
    iteration and ``u_prev`` the propagator up to the start of segment
    ``j`` from the current forward sweep. With several RF scales both carry
    a leading member axis, and ``c_j`` (orthogonal multipliers) then has
    shape ``(members, L, d, d)``; for a single system ``(d, d)`` and
    ``(L, d, d)`` are accepted.

    Returns ``(row, props)`` where ``props`` are the new segment
    propagators (one per member, same leading layout as ``u_prev``).
    """
    single = np.ndim(b_j) == 2
    if single:
        b_j, u_prev = b_j[None], u_prev[None]
        c_j = None if c_j is None else np.asarray(c_j)[None]
    lam = config.penalty_array(problem.n_controls)
    delta, alpha = config.delta, config.push_weight
    row = (1 - delta) * co_sequence.u[j] + (delta / lam) * _ensemble_overlap(
        b_j, problem.controls, u_prev, scales, weights)
    L = co_sequence.v.shape[-1]
    if L > 0 and c_j is not None:
        push = _ensemble_overlap(c_j, problem.controls, u_prev[:, None], scales, weights)
        # push: (L, M); v~ row: (M, L)
        row = row + (alpha * delta / L) * np.sum(co_sequence.v[j].T - push / lam, axis=0)
    props = np.array([_segment_props(problem, row, s)[0] for s in scales])
    return row, (props[0] if single else props)


def co_sequence_update_step(problem: ControlProblem, config: KrotovConfig, co_sequence: CoSequence,
                            pulse, j: int, b_j, u_j, c_j=None, scales=(1.0,), weights=(1.0,)):
    """Update row ``j`` of the co-sequence in place and back-step the multipliers.

    ``b_j`` / ``c_j`` are the current multipliers after segment ``j`` and
    ``u_j`` the propagator up to the end of segment ``j`` (same layout
    rules as :func:`forward_update_step`). Returns the multipliers before
    segment ``j``: ``(b_prev, c_prev)``.
    """
    single = np.ndim(b_j) == 2
    if single:
        b_j, u_j = b_j[None], u_j[None]
        c_j = None if c_j is None else np.asarray(c_j)[None]
    lam = config.penalty_array(problem.n_controls)
    eta, alpha = config.eta, config.push_weight
    u_row = np.asarray(pulse, dtype=float)[j]
    co_sequence.u[j] = (1 - eta) * u_row + (eta / lam) * _ensemble_overlap(
        b_j, problem.controls, u_j, scales, weights)
    L = co_sequence.v.shape[-1]
    if L > 0 and c_j is not None:
        push = _ensemble_overlap(c_j, problem.controls, u_j[:, None], scales, weights)
        v_row = (alpha * eta / L) * (u_row - np.sum(push, axis=0) / lam)
        co_sequence.v[j] = v_row[:, None]
    props = np.array([_segment_props(problem, co_sequence.u[j], s)[0] for s in scales])
    b_prev = dag(props) @ b_j
    c_prev = None if c_j is None else dag(props)[:, None] @ c_j
    if single:
        return b_prev[0], (None if c_prev is None else c_prev[0])
    return b_prev, c_prev


class _Run:
    def __init__(self, problem, config):
        self.problem = problem
        self.config = config
        self.scales = np.asarray(config.rf_scales, dtype=float)
        if config.rf_weights is None:
            self.weights = np.full(len(self.scales), 1.0 / len(self.scales))
        else:
            self.weights = np.asarray(config.rf_weights, dtype=float)
            if self.weights.shape != self.scales.shape or abs(self.weights.sum() - 1) > 1e-12:
                raise ContractError("rf_weights must match rf_scales and sum to 1")
        self.lam = config.penalty_array(problem.n_controls)
        # penalty weight under which the update's fixed point is stationary,
        # expressed in normalized-fidelity units
        self.trace_penalties = self.lam * problem.dt / problem.fidelity_scale()

    def forward_all(self, u):
        p = self.problem
        n_m, d = len(self.scales), p.dim
        fwd = np.empty((p.n_segments + 1, n_m, d, d), dtype=complex)
        fwd[0] = np.eye(d)
        props = np.stack([_segment_props(p, u, s) for s in self.scales], axis=1)
        for j in range(p.n_segments):
            fwd[j + 1] = props[j] @ fwd[j]
        return fwd

    def terminals(self, totals, members):
        task, kappa = self.problem.task, self.config.kappa
        b = np.array([terminal_multiplier(task, t, kappa) for t in totals])
        c = None
        if members:
            c = np.array([terminal_orthogonal_multipliers(task, t, members, kappa) for t in totals])
        return b, c

    def performance(self, u, totals, members):
        p, task = self.problem, self.problem.task
        rows = []
        for s, total in zip(self.scales, totals):
            if task.kind == "gate":
                realized = total
                fid = gate_fidelity(realized, task.target)
            else:
                realized = total @ task.rho_initial @ dag(total)
                fid = state_fidelity(realized, task.rho_target, task.target_norm)
            f_o = push_fidelity(realized, members, task.kind, task.target) if members else 0.0
            pen = float(np.dot(self.trace_penalties, np.sum((s * u) ** 2, axis=0)))
            rows.append([fid - self.config.push_weight * f_o - pen, fid, f_o, pen])
        return Performance(*(float(x) for x in self.weights @ np.array(rows)))


def run(problem: ControlProblem, initial_pulse, config: KrotovConfig) -> OptimizationTrace:
    """Optimize ``initial_pulse`` with (push-pull) Krotov.

    The guess doubles as the initial co-sequence. Trace objectives report
    the penalty as ``lambda_k dt r_k`` divided by the fidelity
    normalization, the discrete penalty whose stationary point the update
    rule targets.
    """
    start = time.perf_counter()
    p, cfg = problem, config
    state = _Run(p, cfg)
    scales, weights = state.scales, state.weights
    n = p.n_segments
    u = check_pulse(p, initial_pulse).copy()
    rng = RngStream(cfg.rng_seed).substream(1)
    oset = None
    L = cfg.orthogonal_L
    if L > 0:
        oset = orthogonal.generate(p.task.target, p.task.kind, L, rng.substream(0),
                                   cfg.candidate_kind, cfg.refresh_policy)
    members = () if oset is None else oset.members
    co = CoSequence.from_pulse(u, L)

    # iteration 0: forward with the guess, back-propagate with the guess as co-sequence
    fwd = state.forward_all(u)
    perf = state.performance(u, fwd[-1], members)
    b_n, c_n = state.terminals(fwd[-1], members)
    b = np.stack([back_propagate(b_n[m], co, p, s) for m, s in enumerate(scales)], axis=1)
    c = None
    if members:
        c = np.stack([back_propagate(c_n[m], co, p, s) for m, s in enumerate(scales)], axis=1)
        for j in range(1, n + 1):
            push = _ensemble_overlap(c[j], p.controls, fwd[j][:, None], scales, weights)
            v_row = (cfg.push_weight * cfg.eta / L) * (u[j - 1] - np.sum(push, axis=0) / state.lam)
            co.v[j - 1] = v_row[:, None]

    trace = OptimizationTrace()
    trace.append(iteration=0, fidelity=perf.fidelity, push_fidelity=perf.push_fidelity,
                 objective=perf.objective, gradient_norm=0.0, elapsed=time.perf_counter() - start)
    quiet = 0
    i = 0
    while True:
        if perf.fidelity >= cfg.fidelity_goal:
            trace.termination_reason = "goal_reached"
            break
        if i >= cfg.max_iterations:
            trace.termination_reason = "max_iterations"
            break
        if quiet >= cfg.stall_window:
            trace.termination_reason = "stalled"
            break
        i += 1
        previous, u_old = perf.objective, u
        # forward sweep
        u = np.empty_like(u_old)
        for j in range(1, n + 1):
            row, props = forward_update_step(p, cfg, co, j - 1, b[j], fwd[j - 1],
                                             None if c is None else c[j], scales, weights)
            u[j - 1] = row
            fwd[j] = props @ fwd[j - 1]
        if oset is not None and cfg.refresh_policy == "per_iteration":
            oset = orthogonal.refresh(oset, p.task.target, rng.substream(i))
            members = oset.members
        perf = state.performance(u, fwd[-1], members)
        trace.append(iteration=i, fidelity=perf.fidelity, push_fidelity=perf.push_fidelity,
                     objective=perf.objective, gradient_norm=float(np.linalg.norm(u - u_old)),
                     elapsed=time.perf_counter() - start)
        quiet = quiet + 1 if abs(perf.objective - previous) < cfg.stall_tol else 0
        if perf.fidelity >= cfg.fidelity_goal or i >= cfg.max_iterations:
            continue
        # backward sweep
        b_n, c_n = state.terminals(fwd[-1], members)
        b[n] = b_n
        if c is not None:
            c[n] = c_n
        for j in range(n, 0, -1):
            b_prev, c_prev = co_sequence_update_step(p, cfg, co, u, j - 1, b[j], fwd[j],
                                                     None if c is None else c[j], scales, weights)
            b[j - 1] = b_prev
            if c is not None:
                c[j - 1] = c_prev
    trace.final_pulse = u
    return trace
