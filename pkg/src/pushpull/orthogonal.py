"""Random operator sets orthogonal to a control target."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, EmptySetError, GenerationError
from .linalg import RngStream, gram_schmidt_against, random_operator

__all__ = ["OrthogonalSet", "ORTHOGONALITY_RTOL", "MAX_ROUNDS", "generate", "refresh"]

ORTHOGONALITY_RTOL = 1e-10
MAX_ROUNDS = 16


@dataclass(frozen=True, eq=False)
class OrthogonalSet:
    """``L`` unit-norm operators orthogonal to a target and to each other.

    ``generation_key`` is the sub-stream key path the members were drawn
    from; together with ``generation_seed`` it reproduces the set.
    """

    members: tuple
    task_kind: str
    candidate_kind: str
    refresh_policy: str
    generation_seed: int
    generation_key: tuple = ()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def _check_member(target, m, task_kind):
    t_norm = np.linalg.norm(target)
    if abs(np.vdot(target, m)) > ORTHOGONALITY_RTOL * t_norm * np.linalg.norm(m):
        return False
    if task_kind == "state" and np.linalg.norm(m - m.conj().T) > 1e-12 * np.linalg.norm(m):
        return False
    return True


def generate(target, task_kind: str, L: int, rng: RngStream,
             candidate_kind: str | None = None, refresh_policy: str = "fixed") -> OrthogonalSet:
    """Draw ``L`` random operators and orthonormalize them against ``target``.

    Candidates that collapse under projection are replaced by fresh draws,
    for at most ``MAX_ROUNDS`` rounds. State tasks require Hermitian
    candidates; gate tasks default to general complex matrices.
    """
    target = np.asarray(target, dtype=complex)
    d = target.shape[0]
    if task_kind not in ("gate", "state"):
        raise ContractError(f"unknown task kind {task_kind!r}")
    if candidate_kind is None:
        candidate_kind = "hermitian" if task_kind == "state" else "general"
    if task_kind == "state" and candidate_kind != "hermitian":
        raise ContractError("state-task orthogonal operators must be drawn Hermitian")
    if refresh_policy not in ("fixed", "per_iteration"):
        raise ContractError(f"unknown refresh policy {refresh_policy!r}")
    if not 1 <= L <= d * d - 1:
        raise ContractError(f"L must lie in [1, {d * d - 1}] for dimension {d}, got {L}")

    members: list[np.ndarray] = []
    for _ in range(MAX_ROUNDS):
        need = L - len(members)
        cands = [random_operator(rng, d, candidate_kind) for _ in range(need)]
        try:
            new = gram_schmidt_against(target, cands, basis=members)
        except EmptySetError:
            new = []
        for m in new:
            if task_kind == "state":
                m = (m + m.conj().T) / 2
                m = m / np.linalg.norm(m)
            if _check_member(target, m, task_kind):
                members.append(m)
        if len(members) == L:
            break
    else:
        raise GenerationError(f"could not generate {L} orthogonal operators in {MAX_ROUNDS} rounds")
    for m in members:
        m.setflags(write=False)
    return OrthogonalSet(tuple(members), task_kind, candidate_kind, refresh_policy,
                         rng.seed, rng.key)


def refresh(oset: OrthogonalSet, target, rng: RngStream) -> OrthogonalSet:
    """Regenerate ``oset`` from ``rng`` under the ``per_iteration`` policy.

    A ``fixed`` set is returned unchanged.
    """
    if oset.refresh_policy == "fixed":
        return oset
    return generate(target, oset.task_kind, len(oset), rng, oset.candidate_kind,
                    oset.refresh_policy)
