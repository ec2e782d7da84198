"""Exact state-vector simulation of the multi-objective alternating ansatz.

A state is a complex128 numpy array of length ``2**N`` with qubit ``q`` at
bit ``q`` of the basis index. Gate functions mutate the array in place and
return it for chaining.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ResourceError
from .rng import as_generator

SIMULATOR_GUARD = 26


@dataclass
class AnsatzParams:
    """Angles of an ``L``-layer ansatz with ``M`` objective blocks per layer."""

    betas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        self.betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        self.gammas = np.atleast_2d(np.asarray(self.gammas, dtype=float))
        if self.betas.shape != self.gammas.shape:
            raise InputError(f"betas {self.betas.shape} and gammas {self.gammas.shape} differ in shape")
        if not (np.all(np.isfinite(self.betas)) and np.all(np.isfinite(self.gammas))):
            raise InputError("ansatz angles must be finite")

    @property
    def layers(self) -> int:
        return self.betas.shape[0]

    @property
    def n_blocks(self) -> int:
        return self.betas.shape[1]

    def to_vector(self) -> np.ndarray:
        """Flat ``[betas..., gammas...]`` (row-major), length ``2 L M``."""
        return np.concatenate([self.betas.ravel(), self.gammas.ravel()])

    @classmethod
    def from_vector(cls, vector, layers: int, n_blocks: int) -> AnsatzParams:
        v = np.asarray(vector, dtype=float)
        size = layers * n_blocks
        if v.shape != (2 * size,):
            raise InputError(f"expected {2 * size} parameters, got {v.shape}")
        return cls(v[:size].reshape(layers, n_blocks), v[size:].reshape(layers, n_blocks))

    @classmethod
    def zeros(cls, layers: int, n_blocks: int) -> AnsatzParams:
        return cls(np.zeros((layers, n_blocks)), np.zeros((layers, n_blocks)))


@dataclass
class ShotCounts:
    """Measurement outcomes keyed by basis index."""

    n_qubits: int
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self):
        return len(self.counts)


def n_qubits_of(state: np.ndarray) -> int:
    size = state.shape[0]
    if state.ndim != 1 or size < 2 or size & (size - 1):
        raise InputError(f"state length must be a power of two >= 2, got shape {state.shape}")
    return size.bit_length() - 1


def init_plus(n_qubits: int) -> np.ndarray:
    """``|+>^N``: every amplitude equals ``2**(-N/2)``."""
    if not 1 <= n_qubits <= SIMULATOR_GUARD:
        raise ResourceError(f"simulator supports 1..{SIMULATOR_GUARD} qubits, got {n_qubits}")
    return np.full(1 << n_qubits, 2.0 ** (-n_qubits / 2), dtype=np.complex128)


def basis_state(n_qubits: int, index: int) -> np.ndarray:
    if not 1 <= n_qubits <= SIMULATOR_GUARD:
        raise ResourceError(f"simulator supports 1..{SIMULATOR_GUARD} qubits, got {n_qubits}")
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[index] = 1.0
    return state


def apply_cost_phase(state: np.ndarray, diag: np.ndarray, gamma: float) -> np.ndarray:
    """``state[x] *= exp(-i gamma diag[x])``."""
    if diag.shape != state.shape:
        raise InputError(f"diagonal shape {diag.shape} does not match state {state.shape}")
    if gamma != 0.0:
        state *= np.exp(-1j * gamma * diag)
    return state


def apply_mixer(state: np.ndarray, beta: float) -> np.ndarray:
    """Apply ``exp(-i beta X)`` to every qubit."""
    n = n_qubits_of(state)
    if beta == 0.0:
        return state
    c, s = np.cos(beta), -1j * np.sin(beta)
    for q in range(n):
        view = state.reshape(-1, 2, 1 << q)
        lo = view[:, 0, :].copy()
        hi = view[:, 1, :]
        view[:, 0, :] = c * lo + s * hi
        view[:, 1, :] = s * lo + c * hi
    return state


def run_ansatz(diagonals, params: AnsatzParams) -> np.ndarray:
    """Prepare the ansatz state from ``|+>^N``.

    Within each layer the objective blocks run in order ``k = 1..M``, each
    being the cost phase ``gamma[l, k]`` followed by the mixer ``beta[l, k]``.
    """
    diagonals = np.atleast_2d(np.asarray(diagonals, dtype=float))
    if diagonals.shape[0] != params.n_blocks:
        raise InputError(f"{diagonals.shape[0]} diagonals for {params.n_blocks} blocks per layer")
    size = diagonals.shape[1]
    if size < 2 or size & (size - 1):
        raise InputError(f"diagonal length must be a power of two, got {size}")
    state = init_plus(size.bit_length() - 1)
    for layer in range(params.layers):
        for k in range(params.n_blocks):
            apply_cost_phase(state, diagonals[k], params.gammas[layer, k])
            apply_mixer(state, params.betas[layer, k])
    return state


def probabilities(state: np.ndarray) -> np.ndarray:
    p = state.real**2 + state.imag**2
    return p / p.sum()


def sample(state: np.ndarray, n_shots: int, rng_seed) -> ShotCounts:
    """Draw ``n_shots`` measurement outcomes (multinomial over ``|amplitude|**2``).

    ``rng_seed`` is an integer seed or a :class:`numpy.random.Generator`.
    """
    if n_shots < 1:
        raise InputError(f"n_shots must be >= 1, got {n_shots}")
    n = n_qubits_of(state)
    gen = as_generator(rng_seed)
    hist = gen.multinomial(n_shots, probabilities(state))
    nz = np.flatnonzero(hist)
    return ShotCounts(n, dict(zip(nz.tolist(), hist[nz].tolist())))


def ranked_outcomes(counts: ShotCounts) -> list[int]:
    """All observed outcomes by descending count, ties by ascending index."""
    return sorted(counts.counts, key=lambda x: (-counts.counts[x], x))


def top_candidates(counts: ShotCounts, n: int) -> list[int]:
    """The ``n`` most frequent outcomes (fewer if fewer were observed)."""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    return ranked_outcomes(counts)[:n]
