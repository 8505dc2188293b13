"""Benchmark spin systems and control targets.

Frequencies are accepted in Hz and converted to angular units (rad/s) here;
everything downstream works in rad/s.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractError
from .linalg import spin_operator
from .model import ControlProblem, GateTask, StateTask

__all__ = [
    "hz",
    "ising_two_qubit",
    "qft_problem",
    "cnot_target",
    "singlet_task",
    "qft_target",
    "nmr_pair",
    "lls_task",
    "individual_controls",
    "collective_controls",
    "standard_lls_duration",
]

TWO_PI = 2 * np.pi


def hz(f: float) -> float:
    """Convert a frequency in Hz to rad/s."""
    return TWO_PI * f


def individual_controls(n_qubits: int) -> np.ndarray:
    """``I_x``, ``I_y`` on every qubit in that order: ``M = 2n``."""
    return np.array([spin_operator(n_qubits, q, a) for q in range(n_qubits) for a in "xy"])


def collective_controls(n_qubits: int) -> np.ndarray:
    """Sum of ``I_x`` and sum of ``I_y`` over all qubits: ``M = 2``."""
    return np.array([sum(spin_operator(n_qubits, q, a) for q in range(n_qubits)) for a in "xy"])


def _ising_h0(n_qubits, coupling_hz, offsets_hz):
    # chain couplings 2*pi*J*2*Iz*Iz between neighbours
    offsets_hz = np.broadcast_to(np.asarray(offsets_hz, dtype=float), (n_qubits,))
    h0 = sum(hz(nu) * spin_operator(n_qubits, q, "z") for q, nu in enumerate(offsets_hz))
    for q in range(n_qubits - 1):
        h0 = h0 + hz(coupling_hz) * 2 * spin_operator(n_qubits, q, "z") @ spin_operator(n_qubits, q + 1, "z")
    return np.asarray(h0, dtype=complex)


def ising_two_qubit(coupling_hz: float, offsets_hz=(0.0, 0.0), *, task=None,
                    n_segments: int = 1, dt: float = 1.0) -> ControlProblem:
    """Two Ising-coupled qubits with individual x/y controls.

    ``H0 = 2 pi sum_q nu_q Iz_q + 2 pi J 2 Iz_1 Iz_2``. Without ``task`` the
    problem targets CNOT.
    """
    h0 = _ising_h0(2, coupling_hz, offsets_hz)
    if task is None:
        task = GateTask(cnot_target())
    return ControlProblem(h0, individual_controls(2), n_segments, dt, task, name="ising2")


def qft_problem(n_qubits: int, coupling_hz: float, offsets_hz=0.0, *,
                n_segments: int, dt: float) -> ControlProblem:
    """``n``-qubit Ising chain with individual controls targeting the QFT."""
    h0 = _ising_h0(n_qubits, coupling_hz, offsets_hz)
    return ControlProblem(h0, individual_controls(n_qubits), n_segments, dt,
                          GateTask(qft_target(n_qubits)), name=f"qft{n_qubits}")


def cnot_target() -> np.ndarray:
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def singlet_task() -> StateTask:
    """``|00><00|`` to the singlet ``(|01> - |10>)/sqrt 2``."""
    ket00 = np.array([1, 0, 0, 0], dtype=complex)
    s0 = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    return StateTask(np.outer(ket00, ket00.conj()), np.outer(s0, s0.conj()))


def qft_target(n_qubits: int) -> np.ndarray:
    """DFT matrix ``omega^{jk} / sqrt(d)`` with ``omega = exp(2 pi i / d)``."""
    if not 1 <= n_qubits <= 10:
        raise ContractError("n_qubits must lie in [1, 10]")
    d = 2**n_qubits
    jk = np.outer(np.arange(d), np.arange(d)) % d
    return np.exp(2j * np.pi * jk / d) / np.sqrt(d)


def nmr_pair(delta_nu_hz: float, j_hz: float, *, task=None, n_segments: int = 1,
             dt: float = 1.0) -> ControlProblem:
    """Homonuclear spin pair in the rotating frame with collective RF controls.

    ``H0 = -pi dnu Iz_A + pi dnu Iz_B + 2 pi J Iz_A Iz_B``; controls
    ``Ix_A + Ix_B`` and ``Iy_A + Iy_B``. Defaults to the singlet-order task.
    """
    iza, izb = spin_operator(2, 0, "z"), spin_operator(2, 1, "z")
    h0 = -np.pi * delta_nu_hz * iza + np.pi * delta_nu_hz * izb + TWO_PI * j_hz * iza @ izb
    if task is None:
        task = lls_task()
    return ControlProblem(h0, collective_controls(2), n_segments, dt, task, name="nmr_pair")


def lls_task() -> StateTask:
    """Thermal deviation ``Iz_A + Iz_B`` to singlet-triplet order ``-I_A . I_B``."""
    rho0 = spin_operator(2, 0, "z") + spin_operator(2, 1, "z")
    rho_t = -sum(spin_operator(2, 0, a) @ spin_operator(2, 1, a) for a in "xyz")
    return StateTask(rho0, rho_t)


def standard_lls_duration(delta_nu_hz: float, j_hz: float) -> float:
    """Duration (s) of the conventional singlet-preparation sequence, ``1/(2J) + 3/(4 dnu)``."""
    return 1 / (2 * j_hz) + 3 / (4 * delta_nu_hz)
