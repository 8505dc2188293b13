"""Control problems, piecewise-constant propagation and fidelities.

Pulses are real arrays of shape ``(N, M)``: row ``j`` holds the amplitudes
(rad/s) of the ``M`` controls during segment ``j``. Segment and control
indices are 0-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ContractError
from .linalg import dag, expm_generator, is_hermitian, is_unitary

__all__ = [
    "GateTask",
    "StateTask",
    "ControlProblem",
    "PropagatorCache",
    "Performance",
    "check_pulse",
    "segment_hamiltonian",
    "propagate",
    "gate_fidelity",
    "state_overlap",
    "state_fidelity",
    "evolve_state",
    "push_fidelity",
    "resource",
    "performance",
    "ensemble_performance",
    "final_fidelity",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GateTask:
    """Synthesize ``target`` (unitary)."""

    target: np.ndarray
    kind = "gate"

    def __post_init__(self):
        object.__setattr__(self, "target", _frozen(self.target))
        if not is_unitary(self.target):
            raise ContractError("gate target must be unitary")


@dataclass(frozen=True, eq=False)
class StateTask:
    """Transfer ``rho_initial`` to ``rho_target`` (both Hermitian)."""

    rho_initial: np.ndarray
    rho_target: np.ndarray
    kind = "state"

    def __post_init__(self):
        object.__setattr__(self, "rho_initial", _frozen(self.rho_initial))
        object.__setattr__(self, "rho_target", _frozen(self.rho_target))
        for name in ("rho_initial", "rho_target"):
            if not is_hermitian(getattr(self, name)):
                raise ContractError(f"{name} must be Hermitian")
        if self.target_norm <= 0:
            raise ContractError("rho_target is identically zero")

    @property
    def target(self) -> np.ndarray:
        return self.rho_target

    @property
    def target_norm(self) -> float:
        """Self-overlap ``Tr{rho_t^2}`` used to normalize state fidelities."""
        return float(np.vdot(self.rho_target, self.rho_target).real)


Task = Union[GateTask, StateTask]


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """``H(t) = H0 + sum_k u_k(t) A_k`` on ``n_segments`` slices of ``dt`` seconds."""

    h0: np.ndarray
    controls: np.ndarray
    n_segments: int
    dt: float
    task: Task
    name: str = field(default="problem")

    def __post_init__(self):
        h0 = _frozen(self.h0)
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise ContractError(f"h0 must be square, got {h0.shape}")
        controls = np.asarray(self.controls, dtype=complex)
        if controls.ndim == 2:
            controls = controls[None]
        if controls.ndim != 3 or controls.shape[1:] != h0.shape:
            raise ContractError(f"controls must be M operators of shape {h0.shape}")
        controls = _frozen(controls)
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "controls", controls)
        if not is_hermitian(h0):
            raise ContractError("h0 must be Hermitian")
        for k, a in enumerate(controls):
            if not is_hermitian(a):
                raise ContractError(f"control {k} must be Hermitian")
        if int(self.n_segments) < 1:
            raise ContractError("n_segments must be >= 1")
        object.__setattr__(self, "n_segments", int(self.n_segments))
        if not self.dt > 0:
            raise ContractError("dt must be positive")
        for op in (self.task.target,) + ((self.task.rho_initial,) if self.task.kind == "state" else ()):
            if op.shape != h0.shape:
                raise ContractError("task operators must match the Hamiltonian dimension")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return self.controls.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_segments, self.n_controls)

    @property
    def duration(self) -> float:
        return self.n_segments * self.dt

    def with_task(self, task: Task, **changes) -> "ControlProblem":
        kw = dict(h0=self.h0, controls=self.controls, n_segments=self.n_segments,
                  dt=self.dt, task=task, name=self.name)
        kw.update(changes)
        return ControlProblem(**kw)

    def fidelity_scale(self) -> float:
        """Normalization dividing the raw overlap: ``d^2`` or ``Tr{rho_t^2}``."""
        if self.task.kind == "gate":
            return float(self.dim**2)
        return self.task.target_norm


@dataclass(frozen=True, eq=False)
class PropagatorCache:
    """Segment propagators and their partial products.

    ``forward[j]`` is ``U_{1:j} = U_j ... U_1`` (``forward[0]`` is the
    identity) and ``backward[j]`` is ``U_{j+1:N} = U_N ... U_{j+1}``
    (``backward[N]`` is the identity), each with ``N + 1`` entries.
    ``segment_props[j]`` is the propagator of 0-based segment ``j``.
    """

    segment_props: np.ndarray
    forward: np.ndarray
    backward: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.forward[-1]


@dataclass(frozen=True)
class Performance:
    objective: float
    fidelity: float
    push_fidelity: float
    penalty: float


def check_pulse(problem: ControlProblem, pulse) -> np.ndarray:
    u = np.asarray(pulse, dtype=float)
    if u.shape != problem.shape:
        raise ContractError(f"pulse shape {u.shape} does not match problem {problem.shape}")
    if not np.all(np.isfinite(u)):
        raise ContractError("pulse contains non-finite amplitudes")
    return u


def segment_hamiltonian(problem: ControlProblem, pulse, j: int) -> np.ndarray:
    if not 0 <= j < problem.n_segments:
        raise ContractError(f"segment index {j} out of range")
    u = np.asarray(pulse, dtype=float)[j]
    return problem.h0 + np.tensordot(u, problem.controls, axes=1)


def _hamiltonians(problem, u, scale=1.0):
    return problem.h0 + np.tensordot(scale * u, problem.controls, axes=(1, 0))


def propagate(problem: ControlProblem, pulse, scale: float = 1.0) -> PropagatorCache:
    """Forward and backward partial products for ``pulse``.

    ``scale`` multiplies every control amplitude (RF inhomogeneity).
    """
    u = check_pulse(problem, pulse)
    props = expm_generator(_hamiltonians(problem, u, scale), problem.dt)
    n, d = problem.n_segments, problem.dim
    fwd = np.empty((n + 1, d, d), dtype=complex)
    bwd = np.empty((n + 1, d, d), dtype=complex)
    fwd[0] = np.eye(d)
    bwd[n] = np.eye(d)
    for j in range(n):
        fwd[j + 1] = props[j] @ fwd[j]
    for j in range(n - 1, -1, -1):
        bwd[j] = bwd[j + 1] @ props[j]
    return PropagatorCache(props, fwd, bwd)


def gate_fidelity(u, u_target) -> float:
    """``|Tr{U_t^dagger U}|^2 / d^2``."""
    u = np.asarray(u)
    u_target = np.asarray(u_target)
    if u.shape != u_target.shape:
        raise ContractError(f"dimension mismatch: {u.shape} vs {u_target.shape}")
    d = u.shape[-1]
    return float(abs(np.vdot(u_target, u)) ** 2 / d**2)


def state_overlap(rho, rho_target) -> float:
    """Raw overlap ``Tr{rho_t rho}`` (real for Hermitian arguments)."""
    rho = np.asarray(rho)
    rho_target = np.asarray(rho_target)
    if rho.shape != rho_target.shape:
        raise ContractError(f"dimension mismatch: {rho.shape} vs {rho_target.shape}")
    return float(np.vdot(rho_target, rho).real)


def state_fidelity(rho, rho_target, norm: float | None = None) -> float:
    """``Tr{rho_t rho} / Tr{rho_t^2}``; pass ``norm`` to override the denominator."""
    if norm is None:
        norm = state_overlap(rho_target, rho_target)
        if norm == 0:
            raise ContractError("rho_target is identically zero")
    return state_overlap(rho, rho_target) / norm


def evolve_state(cache: PropagatorCache, rho0, j: int) -> np.ndarray:
    """``U_{1:j} rho0 U_{1:j}^dagger`` after ``j`` segments (``0 <= j <= N``)."""
    n = len(cache.forward) - 1
    if not 0 <= j <= n:
        raise ContractError(f"segment count {j} out of range 0..{n}")
    w = cache.forward[j]
    return w @ np.asarray(rho0) @ dag(w)


def _members(orthogonal_set):
    if orthogonal_set is None:
        return []
    return list(getattr(orthogonal_set, "members", orthogonal_set))


def push_fidelity(realized, orthogonal_set, task_kind: str, target=None) -> float:
    """Mean fidelity of ``realized`` against each orthogonal operator.

    For ``task_kind == "state"`` the overlaps are divided by the true
    target's self-overlap, so ``target`` is required.
    """
    members = _members(orthogonal_set)
    if not members:
        raise ContractError("orthogonal set is empty")
    if task_kind == "gate":
        vals = [gate_fidelity(realized, v) for v in members]
    elif task_kind == "state":
        if target is None:
            raise ContractError("state push fidelity needs the true target for normalization")
        norm = state_overlap(target, target)
        vals = [state_overlap(realized, r) / norm for r in members]
    else:
        raise ContractError(f"unknown task kind {task_kind!r}")
    return float(np.mean(vals))


def resource(pulse, k: int) -> float:
    """Control resource ``r_k = sum_j u_jk^2``."""
    u = np.asarray(pulse, dtype=float)
    if not 0 <= k < u.shape[1]:
        raise ContractError(f"control index {k} out of range")
    return float(np.sum(u[:, k] ** 2))


def _realized(problem, cache):
    if problem.task.kind == "gate":
        return cache.total
    w = cache.total
    return w @ problem.task.rho_initial @ dag(w)


def final_fidelity(problem: ControlProblem, cache: PropagatorCache) -> float:
    if problem.task.kind == "gate":
        return gate_fidelity(cache.total, problem.task.target)
    return state_fidelity(_realized(problem, cache), problem.task.rho_target, problem.task.target_norm)


def performance(problem: ControlProblem, pulse, penalties=None, push_weight: float = 0.0,
                orthogonal_set=None, cache: PropagatorCache | None = None) -> Performance:
    """Push-pull performance ``J_PP = F - alpha F_o - sum_k lambda_k r_k``.

    With an empty ``orthogonal_set`` the push term is zero and this is the
    pull-only performance. A precomputed ``cache`` for ``pulse`` may be
    passed to skip propagation.
    """
    u = check_pulse(problem, pulse)
    if not -1 <= push_weight <= 1:
        raise ContractError(f"push weight must lie in [-1, 1], got {push_weight}")
    if penalties is None:
        penalties = np.zeros(problem.n_controls)
    penalties = np.asarray(penalties, dtype=float)
    if penalties.shape != (problem.n_controls,) or np.any(penalties < 0):
        raise ContractError("penalties must be M non-negative values")
    if cache is None:
        cache = propagate(problem, u)
    fid = final_fidelity(problem, cache)
    members = _members(orthogonal_set)
    f_o = 0.0
    if members:
        f_o = push_fidelity(_realized(problem, cache), members, problem.task.kind,
                            target=problem.task.target)
    pen = float(np.dot(penalties, np.sum(u**2, axis=0)))
    return Performance(fid - push_weight * f_o - pen, fid, f_o, pen)


def ensemble_performance(problem: ControlProblem, pulse, rf_scales: Sequence[float],
                         weights: Sequence[float] | None = None, penalties=None,
                         push_weight: float = 0.0, orthogonal_set=None) -> Performance:
    """Weighted average of :func:`performance` over RF amplitude scales."""
    scales = np.asarray(rf_scales, dtype=float)
    if scales.size == 0:
        raise ContractError("rf_scales is empty")
    if np.any(scales <= 0):
        raise ContractError("rf scales must be positive")
    w = _ensemble_weights(scales, weights)
    u = check_pulse(problem, pulse)
    rows = [performance(problem, s * u, penalties, push_weight, orthogonal_set) for s in scales]
    fields = np.array([[p.objective, p.fidelity, p.push_fidelity, p.penalty] for p in rows])
    return Performance(*(float(x) for x in w @ fields))


def _ensemble_weights(scales, weights):
    if weights is None:
        return np.full(len(scales), 1.0 / len(scales))
    w = np.asarray(weights, dtype=float)
    if w.shape != scales.shape or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ContractError("weights must be non-negative, one per scale, and sum to 1")
    return w
