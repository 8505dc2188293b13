"""RF-inhomogeneity profiles of a fixed pulse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..model import ControlProblem, check_pulse, evolve_state, gate_fidelity, propagate, state_fidelity

__all__ = ["RFProfile", "rf_profile"]


@dataclass(frozen=True)
class RFProfile:
    """``curves[s, j]`` is the fidelity after ``j`` segments at ``scales[s]``."""

    scales: np.ndarray
    curves: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.curves[:, -1]

    def to_csv(self) -> str:
        head = "segment," + ",".join(f"scale={s!r}" for s in self.scales.tolist())
        rows = [f"{j}," + ",".join(repr(float(x)) for x in self.curves[:, j])
                for j in range(self.curves.shape[1])]
        return "\n".join([head] + rows) + "\n"


def rf_profile(problem: ControlProblem, pulse, scales) -> RFProfile:
    """Fidelity evolution of ``pulse`` with every amplitude scaled by each ``s``.

    State tasks record the normalized state fidelity of the partially evolved
    ``rho_{1:j}``; gate tasks record the gate fidelity of the partial
    propagator. Column ``j = 0`` is the value before the first segment. No
    orthogonal set enters.
    """
    u = check_pulse(problem, pulse)
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 1 or scales.size == 0:
        raise ContractError("scales must be a non-empty list")
    task = problem.task
    n = problem.n_segments
    curves = np.empty((scales.size, n + 1))
    for i, s in enumerate(scales):
        cache = propagate(problem, u, s)
        for j in range(n + 1):
            if task.kind == "state":
                rho = evolve_state(cache, task.rho_initial, j)
                curves[i, j] = state_fidelity(rho, task.rho_target, task.target_norm)
            else:
                curves[i, j] = gate_fidelity(cache.forward[j], task.target)
    return RFProfile(scales, curves)
