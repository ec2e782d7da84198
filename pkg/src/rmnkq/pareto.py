"""Pareto dominance, non-dominated filtering, hypervolume and the unbounded archive.

All objectives are minimized.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import InputError

REFERENCE_MARGIN = 1e-9


def dominates(a, b) -> bool:
    """True iff ``a`` is component-wise <= ``b`` and ``a != b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"cannot compare vectors of shapes {a.shape} and {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_filter(points) -> np.ndarray:
    """Boolean mask of points not dominated by any other point.

    Identical points do not dominate each other, so duplicates are all kept.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = pts.shape[0]
    keep = np.ones(n, dtype=bool)
    if n <= 1:
        return keep
    # visiting in lexicographic order means a point can only be dominated by earlier ones
    order = np.lexsort(pts.T[::-1])
    front = np.empty_like(pts)
    size = 0
    for idx in order:
        p = pts[idx]
        f = front[:size]
        if size and np.any(np.all(f <= p, axis=1) & np.any(f < p, axis=1)):
            keep[idx] = False
        else:
            front[size] = p
            size += 1
    return keep


def reference_point(n_objectives: int, margin: float = REFERENCE_MARGIN) -> np.ndarray:
    """``(1 + margin, ..., 1 + margin)``: valid for every RMNK objective vector."""
    return np.full(n_objectives, 1.0 + margin)


def _hv2d(pts: np.ndarray, ref: np.ndarray) -> float:
    # staircase sweep along the first objective
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    x = pts[:, 0]
    y = np.minimum.accumulate(pts[:, 1])
    widths = np.diff(np.append(x, ref[0]))
    return float(np.sum(widths * (ref[1] - y)))


def _nd(pts: np.ndarray) -> np.ndarray:
    """Unique non-dominated rows (quadratic broadcast; used on small sets)."""
    pts = np.unique(pts, axis=0)
    if pts.shape[0] <= 1:
        return pts
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=2)
    dominated = np.any(le & ~le.T, axis=0)
    return pts[~dominated]


def _wfg(pts: np.ndarray, ref: np.ndarray) -> float:
    """Sum of exclusive contributions; ``pts`` must be unique and non-dominated."""
    n, m = pts.shape
    if n == 0:
        return 0.0
    if n == 1:
        return float(np.prod(ref - pts[0]))
    if m == 2:
        return _hv2d(pts, ref)
    # worst-first on the last objective: every limit set then shares the
    # last coordinate of its point, so its volume factors into a slab height
    # times an (m-1)-dimensional volume
    pts = pts[np.argsort(-pts[:, -1], kind="stable")]
    head, sub_ref = pts[:, :-1], ref[:-1]
    total = 0.0
    for k in range(n):
        p = head[k]
        exclusive = float(np.prod(sub_ref - p))
        if k + 1 < n:
            limited = _nd(np.maximum(head[k + 1 :], p))
            exclusive -= _wfg(limited, sub_ref)
        total += (ref[-1] - pts[k, -1]) * exclusive
    return total


def hypervolume(points, ref) -> float:
    """Volume dominated by ``points`` and bounded by the reference point ``ref``.

    Points that do not strictly dominate ``ref`` in every coordinate add no
    volume. Exact: sweep for two objectives, WFG exclusive-volume recursion
    for three or more.
    """
    ref = np.asarray(ref, dtype=float).ravel()
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return 0.0
    pts = np.atleast_2d(pts)
    if pts.shape[1] != ref.shape[0]:
        raise InputError(f"points have {pts.shape[1]} objectives but the reference has {ref.shape[0]}")
    pts = pts[np.all(pts < ref, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    if ref.shape[0] == 1:
        return float(ref[0] - pts[:, 0].min())
    return float(_wfg(_nd(pts), ref))


def exclusive_hypervolume(point, others, ref) -> float:
    """Volume dominated by ``point`` but by none of ``others`` (clamped at 0)."""
    point = np.asarray(point, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if not np.all(point < ref):
        return 0.0
    others = np.asarray(others, dtype=float).reshape(-1, point.shape[0])
    others = others[np.all(others < ref, axis=1)]
    volume = float(np.prod(ref - point))
    if others.shape[0]:
        volume -= hypervolume(np.maximum(others, point), ref)
    return max(volume, 0.0)


class ParetoArchive:
    """Unbounded archive of mutually non-dominated ``(solution, objectives)`` pairs.

    Solutions are hashable keys (integer-encoded bitstrings in this package).
    Distinct solutions with equal objective vectors are all retained.

    When ``ref`` is given the archive tracks its hypervolume incrementally:
    each accepted point adds its exclusive volume with respect to the
    current members, so the tracked value never decreases.
    """

    def __init__(self, n_objectives: int, ref=None):
        self.n_objectives = n_objectives
        self.ref = None if ref is None else np.asarray(ref, dtype=float).copy()
        if self.ref is not None and self.ref.shape != (n_objectives,):
            raise InputError(f"reference point must have length {n_objectives}")
        self._keys: list = []
        self._values = np.empty((0, n_objectives))
        self._index: dict = {}
        self._hv = 0.0
        self._hv_cache: tuple[bytes, float] | None = None

    def __len__(self):
        return len(self._keys)

    def __contains__(self, key):
        return key in self._index

    def __iter__(self):
        return iter(zip(self._keys, self._values))

    @property
    def solutions(self) -> list:
        return list(self._keys)

    @property
    def front(self) -> np.ndarray:
        return self._values.copy()

    def get(self, key):
        pos = self._index.get(key)
        return None if pos is None else self._values[pos].copy()

    def insert(self, key, value) -> bool:
        """Offer one candidate; returns True if it entered the archive."""
        if key in self._index:
            return False
        value = np.asarray(value, dtype=float)
        if value.shape != (self.n_objectives,):
            raise InputError(f"expected an objective vector of length {self.n_objectives}")
        vals = self._values
        if vals.shape[0]:
            if np.any(np.all(vals <= value, axis=1) & np.any(vals < value, axis=1)):
                return False
        if self.ref is not None:
            self._hv += exclusive_hypervolume(value, vals, self.ref)
        if vals.shape[0]:
            beaten = np.all(value <= vals, axis=1) & np.any(value < vals, axis=1)
            if beaten.any():
                survivors = np.flatnonzero(~beaten)
                self._keys = [self._keys[i] for i in survivors]
                vals = vals[survivors]
        self._keys.append(key)
        self._values = np.vstack([vals, value[None, :]])
        self._index = {k: i for i, k in enumerate(self._keys)}
        self._hv_cache = None
        return True

    def update(self, candidates: Iterable) -> int:
        """Offer ``(key, value)`` pairs in order; returns how many were inserted.

        Keys already present are skipped without comparing values.
        """
        return sum(self.insert(key, value) for key, value in candidates)

    def hypervolume(self, ref=None) -> float:
        """Hypervolume of the archive; uses the tracked value for the archive's own reference."""
        if ref is None:
            if self.ref is None:
                raise InputError("archive has no reference point; pass one explicitly")
            return self._hv
        ref = np.asarray(ref, dtype=float)
        if self.ref is not None and np.array_equal(ref, self.ref):
            return self._hv
        tag = ref.tobytes()
        if self._hv_cache is None or self._hv_cache[0] != tag:
            self._hv_cache = (tag, hypervolume(self._values, ref))
        return self._hv_cache[1]

    def to_csv(self, path, n_vars: int) -> Path:
        """Write ``bitstring,f_1..f_M`` rows; bitstrings list ``x_1..x_N``."""
        from .landscape import bitstring

        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bitstring"] + [f"f_{m + 1}" for m in range(self.n_objectives)])
            for key, value in zip(self._keys, self._values):
                w.writerow([bitstring(key, n_vars)] + [repr(float(v)) for v in value])
        return path


def archive_update(archive: ParetoArchive, candidates: Iterable) -> ParetoArchive:
    archive.update(candidates)
    return archive
