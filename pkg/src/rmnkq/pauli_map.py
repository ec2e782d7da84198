"""Compile RMNK objectives to diagonal cost Hamiltonians in the Pauli-Z basis.

Each local table ``f_i`` of ``2**(K+1)`` values becomes the operator
``h_i = sum_S alpha_i(S) Z_S`` acting on qubits ``{p(l) : l in S}`` where
``p(1) = i`` and ``p(l+1)`` is the ``l``-th epistatic partner. The objective
Hamiltonian is ``(1/N) sum_i h_i`` with like supports merged.

Basis convention: in ``|x>``, qubit ``q`` is bit ``q`` of the integer ``x``
(qubit 0 is the least significant bit), so ``Z_q |x> = (-1)**x_q |x>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError, ResourceError
from .landscape import EXHAUSTIVE_GUARD, RmnkLandscape
from .walsh import component_masks, merged_spectrum, spectrum_to_diagonal, walsh_coefficients

PRUNE_TOL = 1e-14


@dataclass(frozen=True)
class PauliZTerm:
    support: tuple[int, ...]
    coefficient: float

    def __post_init__(self):
        support = tuple(sorted(int(q) for q in self.support))
        if len(set(support)) != len(support) or any(q < 0 for q in support):
            raise InputError(f"invalid Pauli-Z support {self.support!r}")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def mask(self) -> int:
        return sum(1 << q for q in self.support)

    @property
    def locality(self) -> int:
        return len(self.support)


@dataclass
class PauliZSum:
    n_qubits: int
    terms: list[PauliZTerm] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for term in self.terms:
            if term.support in seen:
                raise InputError(f"duplicate support {term.support} in PauliZSum")
            if term.support and term.support[-1] >= self.n_qubits:
                raise InputError(f"support {term.support} out of range for {self.n_qubits} qubits")
            seen.add(term.support)

    @property
    def max_locality(self) -> int:
        return max((t.locality for t in self.terms), default=0)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        return {t.support: t.coefficient for t in self.terms}

    def __len__(self):
        return len(self.terms)


def _subset_key(r: int, width: int) -> tuple[int, ...]:
    return tuple(j + 1 for j in range(width) if r >> j & 1)


def component_coefficients(table) -> dict[tuple[int, ...], float]:
    """Pauli-Z coefficients of one lookup table.

    Keys are the 1-based local slots in ``S`` (``()`` is the identity term);
    values are ``2**-(K+1) * sum_x f(x) chi_S(x)``. Row ``x`` of the table
    holds local slot ``l`` at bit ``l - 1``.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim != 1:
        raise InputError("table must be one-dimensional")
    n = table.shape[0]
    if n < 1 or n & (n - 1):
        raise InputError(f"table length must be a power of two, got {n}")
    width = n.bit_length() - 1
    alpha = walsh_coefficients(table)
    return {_subset_key(r, width): float(alpha[r]) for r in range(n)}


def build_component(landscape: RmnkLandscape, m: int, i: int) -> list[PauliZTerm]:
    """Terms of ``h_i`` for objective ``m`` (no ``1/N`` factor, no pruning)."""
    if not 0 <= m < landscape.n_objectives:
        raise IndexError(f"objective index {m} out of range")
    if not 0 <= i < landscape.n_vars:
        raise IndexError(f"position index {i} out of range")
    slots = landscape.positions[m, i]
    coef = component_coefficients(landscape.tables[m, i])
    return [PauliZTerm(tuple(int(slots[l - 1]) for l in subset), a) for subset, a in coef.items()]


def _spectrum(landscape: RmnkLandscape, m: int):
    masks = component_masks(landscape.positions[m])
    return merged_spectrum(landscape.tables[m], masks, scale=1.0 / landscape.n_vars)


def build_hamiltonian(landscape: RmnkLandscape, m: int, prune: float = PRUNE_TOL) -> PauliZSum:
    """Merged ``(1/N) sum_i h_i`` for objective ``m``; terms with ``|alpha| < prune`` are dropped."""
    if not 0 <= m < landscape.n_objectives:
        raise IndexError(f"objective index {m} out of range")
    supports, coef = _spectrum(landscape, m)
    n = landscape.n_vars
    terms = [
        PauliZTerm(tuple(q for q in range(n) if s >> q & 1), c)
        for s, c in zip(supports.tolist(), coef.tolist())
        if abs(c) >= prune
    ]
    terms.sort(key=lambda t: (t.locality, t.support))
    return PauliZSum(n, terms)


def diagonal(h: PauliZSum) -> np.ndarray:
    """Eigenvalues ``<x|H|x>`` for all ``2**n_qubits`` basis states."""
    if h.n_qubits > EXHAUSTIVE_GUARD:
        raise ResourceError(f"diagonal is limited to {EXHAUSTIVE_GUARD} qubits, got {h.n_qubits}")
    supports = np.array([t.mask for t in h.terms], dtype=np.int64)
    coef = np.array([t.coefficient for t in h.terms], dtype=float)
    return spectrum_to_diagonal(supports, coef, h.n_qubits)


def hamiltonian_diagonals(landscape: RmnkLandscape) -> np.ndarray:
    """``(M, 2**N)`` diagonals of every objective Hamiltonian (unpruned spectra)."""
    if landscape.n_vars > EXHAUSTIVE_GUARD:
        raise ResourceError(f"diagonal is limited to {EXHAUSTIVE_GUARD} qubits, got {landscape.n_vars}")
    out = np.empty((landscape.n_objectives, 1 << landscape.n_vars))
    for m in range(landscape.n_objectives):
        supports, coef = _spectrum(landscape, m)
        out[m] = spectrum_to_diagonal(supports, coef, landscape.n_vars)
    return out


# -- plain-text term lists ---------------------------------------------------


def format_terms(h: PauliZSum) -> str:
    """One line per term: ``coefficient q_1 q_2 ... q_k`` (an identity term has no indices)."""
    lines = [f"# n_qubits {h.n_qubits}"]
    for t in h.terms:
        lines.append(" ".join([repr(t.coefficient)] + [str(q) for q in t.support]))
    return "\n".join(lines) + "\n"


def parse_terms(text: str, n_qubits: int | None = None) -> PauliZSum:
    terms = []
    offset = 0
    for raw in text.splitlines(keepends=True):
        line = raw.strip()
        if line.startswith("# n_qubits") and n_qubits is None:
            n_qubits = int(line.split()[2])
        elif line and not line.startswith("#"):
            parts = line.split()
            try:
                terms.append(PauliZTerm(tuple(int(p) for p in parts[1:]), float(parts[0])))
            except ValueError as exc:
                raise FormatError(f"bad term line {line!r}: {exc}", offset=offset) from None
        offset += len(raw.encode())
    if n_qubits is None:
        n_qubits = 1 + max((t.support[-1] for t in terms if t.support), default=0)
    return PauliZSum(n_qubits, terms)


def export_terms(h: PauliZSum, path) -> Path:
    path = Path(path)
    path.write_text(format_terms(h))
    return path
