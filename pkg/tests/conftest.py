import numpy as np
import pytest

from pushpull import systems
from pushpull.linalg import RngStream, random_operator
from pushpull.model import ControlProblem, GateTask, StateTask


def random_problem(seed, d=4, m=2, n=6, dt=0.1, kind="gate", h_scale=1.0):
    rng = RngStream(seed)
    h0 = h_scale * random_operator(rng.substream(0), d, "hermitian")
    controls = [random_operator(rng.substream(1, k), d, "hermitian") for k in range(m)]
    if kind == "gate":
        task = GateTask(random_operator(rng.substream(2), d, "unitary"))
    else:
        psi0 = rng.substream(3).normal(d) + 1j * rng.substream(4).normal(d)
        psi1 = rng.substream(5).normal(d) + 1j * rng.substream(6).normal(d)
        psi0, psi1 = psi0 / np.linalg.norm(psi0), psi1 / np.linalg.norm(psi1)
        task = StateTask(np.outer(psi0, psi0.conj()), np.outer(psi1, psi1.conj()))
    return ControlProblem(h0, controls, n, dt, task)


@pytest.fixture
def cnot_problem():
    return systems.ising_two_qubit(100.0, n_segments=20, dt=2.5e-4)


@pytest.fixture
def singlet_problem():
    return systems.ising_two_qubit(100.0, task=systems.singlet_task(), n_segments=20, dt=2.5e-4)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {line}")
