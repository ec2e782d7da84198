"""Fast Walsh-Hadamard transform and global Walsh spectra of NK-type sums.

Indexing convention: bit ``l`` of a table row (or of a coefficient index)
refers to local slot ``l``. Slot 0 is the position itself, slot ``l >= 1``
is its ``l``-th epistatic partner. A coefficient index ``r`` therefore
stands for the subset ``S = {l : bit l of r is set}``, which is the
``r = sum_{j in S} 2**(j-1)`` rule with 1-based slots.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError


def _check_power_of_two(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise InputError(f"length must be a power of two, got {n}")
    return n.bit_length() - 1


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0.

    ``out[r] = sum_x values[x] * (-1)**popcount(x & r)``. Works for any
    trailing shape; returns a new float or complex array.
    """
    a = np.array(values, dtype=np.result_type(values, np.float64), copy=True)
    n = a.shape[0]
    _check_power_of_two(n)
    tail = a.shape[1:]
    h = 1
    while h < n:
        v = a.reshape((n // (2 * h), 2, h) + tail)
        lo = v[:, 0].copy()
        v[:, 0] += v[:, 1]
        v[:, 1] = lo - v[:, 1]
        h *= 2
    return a


def walsh_coefficients(table: np.ndarray) -> np.ndarray:
    """Coefficients ``alpha[r] = 2**-k * sum_x table[x] * chi_r(x)`` for a table of length ``2**k``.

    These satisfy ``table[x] = sum_r alpha[r] * chi_r(x)``.
    """
    table = np.asarray(table, dtype=float)
    return fwht(table) / table.shape[0]


def component_masks(positions: np.ndarray) -> np.ndarray:
    """Global qubit bitmasks of every local subset for each component.

    ``positions`` has shape ``(n_components, k)`` listing the global index of
    each local slot. Returns an int64 array ``(n_components, 2**k)`` whose
    entry ``r`` is the OR of ``1 << positions[:, l]`` over the bits ``l`` of ``r``.
    """
    positions = np.asarray(positions, dtype=np.int64)
    n_comp, k = positions.shape
    masks = np.zeros((n_comp, 1 << k), dtype=np.int64)
    for slot in range(k):
        width = 1 << slot
        masks[:, width : 2 * width] = masks[:, :width] | (np.int64(1) << positions[:, slot])[:, None]
    return masks


def merged_spectrum(tables: np.ndarray, masks: np.ndarray, scale: float = 1.0):
    """Merge per-component Walsh coefficients into one global spectrum.

    ``tables`` has shape ``(n_components, 2**k)`` or ``(n_components, 2**k, m)``
    for ``m`` functions sharing the same supports. Returns ``(supports,
    coefficients)`` with ``supports`` sorted ascending and unique; like
    supports are summed and every coefficient is multiplied by ``scale``.
    """
    tables = np.asarray(tables, dtype=float)
    coef = fwht(np.moveaxis(tables, 1, 0)) / tables.shape[1]
    coef = np.moveaxis(coef, 0, 1) * scale
    flat_masks = masks.reshape(-1)
    coef = coef.reshape((flat_masks.size,) + tables.shape[2:])
    supports, inverse = np.unique(flat_masks, return_inverse=True)
    merged = np.zeros((supports.size,) + tables.shape[2:])
    np.add.at(merged, inverse, coef)
    return supports, merged


def spectrum_to_diagonal(supports: np.ndarray, coefficients: np.ndarray, n_bits: int) -> np.ndarray:
    """Evaluate ``sum_S c_S (-1)**popcount(x & S)`` for all ``x`` in ``[0, 2**n_bits)``."""
    dense = np.zeros((1 << n_bits,) + np.shape(coefficients)[1:])
    np.add.at(dense, np.asarray(supports, dtype=np.int64), coefficients)
    return fwht(dense)
