"""Per-iteration optimization records shared by both optimizers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["IterationRecord", "OptimizationTrace", "TERMINATION_REASONS"]

TERMINATION_REASONS = ("goal_reached", "max_iterations", "stalled")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    fidelity: float
    push_fidelity: float
    objective: float
    gradient_norm: float
    elapsed: float


@dataclass
class OptimizationTrace:
    """History of one optimization run.

    ``gradient_norm`` holds the norm of the full ascent direction for GRAPE
    and the norm of the amplitude change of the forward sweep for Krotov.
    ``diagnostics`` is only filled when a run is asked to record gradients.
    """

    records: list = field(default_factory=list)
    final_pulse: np.ndarray | None = None
    termination_reason: str | None = None
    diagnostics: list = field(default_factory=list)

    def append(self, **kw):
        self.records.append(IterationRecord(**kw))

    @property
    def n_iterations(self) -> int:
        return len(self.records) - 1

    @property
    def final_fidelity(self) -> float:
        return self.records[-1].fidelity

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def fidelities(self) -> np.ndarray:
        return self.column("fidelity")

    def deterministic_view(self, exclude=("elapsed",)):
        """Trace content with the named (nondeterministic) fields removed."""
        names = [n for n in IterationRecord.__dataclass_fields__ if n not in exclude]
        return {
            "records": [tuple(getattr(r, n) for n in names) for r in self.records],
            "final_pulse": None if self.final_pulse is None else self.final_pulse.tobytes(),
            "termination_reason": self.termination_reason,
        }
