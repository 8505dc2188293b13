"""Dense complex linear algebra on operators.

Operators are plain ``numpy`` arrays of shape ``(d, d)`` (or stacks
``(..., d, d)`` where noted) with ``complex128`` entries.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, EmptySetError

__all__ = [
    "HERMITIAN_RTOL",
    "UNITARY_ATOL",
    "NULL_THRESHOLD",
    "RngStream",
    "dag",
    "hs_inner",
    "frobenius",
    "is_hermitian",
    "is_unitary",
    "expm_generator",
    "kron",
    "kron_all",
    "pauli",
    "spin_operator",
    "gram_schmidt_against",
    "random_operator",
]

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-10
NULL_THRESHOLD = 1e-8

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class RngStream:
    """Seeded, splittable random stream.

    Backed by the counter-based Philox bit generator. Sub-streams are derived
    from an integer key path through ``numpy.random.SeedSequence`` so that a
    given ``(seed, key)`` always produces the same draws, independent of how
    many other streams were created before it.

    >>> a = RngStream(7).substream(3, 0)
    >>> b = RngStream(7).substream(3, 0)
    >>> bool(a.normal(4).tolist() == b.normal(4).tolist())
    True
    """

    def __init__(self, seed: int, key: Sequence[int] = ()):
        self.seed = int(seed) % 2**64
        self.key = tuple(int(k) for k in key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def substream(self, *key: int) -> "RngStream":
        return RngStream(self.seed, self.key + tuple(key))

    def normal(self, size=None) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def dag(x: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(x, -1, -2))


def _as_square(x, name="operator") -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or x.shape[0] < 1:
        raise ContractError(f"{name} must be a non-empty square matrix, got shape {x.shape}")
    return x


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product ``Tr{x^dagger y}``."""
    x = _as_square(x, "x")
    y = _as_square(y, "y")
    if x.shape != y.shape:
        raise ContractError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return complex(np.vdot(x, y))


def frobenius(x) -> float:
    return float(np.linalg.norm(x))


def is_hermitian(x, rtol: float = HERMITIAN_RTOL) -> bool:
    x = np.asarray(x)
    scale = np.linalg.norm(x)
    return bool(np.linalg.norm(x - dag(x)) <= rtol * scale)


def is_unitary(x, atol: float = UNITARY_ATOL) -> bool:
    x = np.asarray(x)
    eye = np.eye(x.shape[-1])
    return bool(np.linalg.norm(dag(x) @ x - eye) <= atol)


def expm_generator(h, tau: float) -> np.ndarray:
    """Propagator ``exp(-i h tau)`` for Hermitian ``h``.

    Computed from the Hermitian eigendecomposition ``h = V diag(w) V^dagger``.
    ``h`` may also be a stack ``(..., d, d)``, in which case each matrix is
    exponentiated independently.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ContractError(f"generator must be square, got shape {h.shape}")
    if tau < 0:
        raise ContractError(f"tau must be non-negative, got {tau}")
    # per-matrix hermiticity check
    skew = np.linalg.norm(h - dag(h), axis=(-2, -1))
    scale = np.linalg.norm(h, axis=(-2, -1))
    if np.any(skew > HERMITIAN_RTOL * scale):
        raise ContractError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * tau * w)
    return (v * phases[..., None, :]) @ dag(v)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli(axis: str) -> np.ndarray:
    return _PAULI[axis].copy()


def spin_operator(n_qubits: int, qubit_index: int, axis: str) -> np.ndarray:
    """Spin-1/2 operator ``sigma_axis / 2`` acting on one qubit of a register.

    Qubit 0 is the leftmost (most significant) tensor factor.
    """
    if axis not in ("x", "y", "z"):
        raise ContractError(f"axis must be one of x, y, z; got {axis!r}")
    if not 0 <= qubit_index < n_qubits:
        raise ContractError(f"qubit_index {qubit_index} out of range for {n_qubits} qubits")
    factors = [_PAULI["i"]] * n_qubits
    factors[qubit_index] = _PAULI[axis] / 2
    return kron_all(factors)


def gram_schmidt_against(target, candidates: Sequence[np.ndarray],
                         basis: Sequence[np.ndarray] = ()) -> list[np.ndarray]:
    """Orthonormalize ``candidates`` against ``target`` and each other.

    Modified Gram-Schmidt with one re-orthogonalization pass. Every candidate
    is unit-normalized first; those whose residual norm falls below
    ``NULL_THRESHOLD`` are dropped. Returned operators have unit Frobenius
    norm. ``basis`` holds already orthonormal operators (orthogonal to the
    target) that the new ones must also be orthogonal to; they are not
    returned.

    Raises
    ------
    EmptySetError
        If no candidate survives projection.
    """
    target = _as_square(target, "target").astype(complex)
    if len(candidates) == 0:
        raise ContractError("candidates must be non-empty")
    t_norm = np.linalg.norm(target)
    if t_norm == 0:
        raise ContractError("target is identically zero")
    basis = [target / t_norm] + [np.asarray(b, dtype=complex) for b in basis]
    out = []
    for c in candidates:
        c = _as_square(c, "candidate").astype(complex)
        if c.shape != target.shape:
            raise ContractError(f"dimension mismatch: {c.shape} vs {target.shape}")
        norm = np.linalg.norm(c)
        if norm == 0:
            continue
        v = c / norm
        for _ in range(2):
            for q in basis:
                v = v - np.vdot(q, v) * q
        norm = np.linalg.norm(v)
        if norm < NULL_THRESHOLD:
            continue
        v = v / norm
        basis.append(v)
        out.append(v)
    if not out:
        raise EmptySetError("all candidates vanish after projection onto the target complement")
    return out


def random_operator(rng: RngStream, dim: int, kind: str = "general") -> np.ndarray:
    """Draw a random ``dim x dim`` operator.

    ``general``: i.i.d. complex standard normal entries (unit mean-square
    modulus). ``hermitian``: ``(G + G^dagger)/2``. ``unitary``: QR
    orthonormalization of ``G`` with the phase convention that makes the
    result Haar distributed.
    """
    if dim < 1:
        raise ContractError(f"dim must be >= 1, got {dim}")
    g = (rng.normal((dim, dim)) + 1j * rng.normal((dim, dim))) / np.sqrt(2)
    if kind == "general":
        return g
    if kind == "hermitian":
        return (g + dag(g)) / 2
    if kind == "unitary":
        q, r = np.linalg.qr(g)
        d = np.diagonal(r)
        return q * (d / np.abs(d))
    raise ContractError(f"unknown operator kind {kind!r}")
