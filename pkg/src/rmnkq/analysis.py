"""Exhaustive ground truth: exact Pareto fronts, bit-flip connectivity, normalized traces."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .errors import InputError
from .landscape import RmnkConfig, RmnkLandscape, evaluate_all, generate
from .pareto import hypervolume, reference_point
from .trace import RunTrace, TraceTable

THRESHOLD = 0.95
HV_NORM_SLACK = 1e-9


@dataclass
class ExactFront:
    pareto_set: list[int]
    pareto_front: np.ndarray
    hv_ideal: float
    ref: np.ndarray
    instance_id: str = ""

    @property
    def n_pf(self) -> int:
        return len(self.pareto_set)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "ref": self.ref.tolist(),
            "hv_ideal": self.hv_ideal,
            "pareto_set": list(map(int, self.pareto_set)),
            "pareto_front": self.pareto_front.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExactFront:
        return cls(
            pareto_set=list(data["pareto_set"]),
            pareto_front=np.array(data["pareto_front"], dtype=float),
            hv_ideal=float(data["hv_ideal"]),
            ref=np.array(data["ref"], dtype=float),
            instance_id=data.get("instance_id", ""),
        )


def pareto_mask_exhaustive(values: np.ndarray) -> np.ndarray:
    """Non-dominated mask for large point sets (block-wise pruning)."""
    values = np.asarray(values, dtype=float)
    alive = np.ones(values.shape[0], dtype=bool)
    # points with small coordinate sums remove the most when visited first;
    # a visited point can never be removed later by a point with a larger sum
    for idx in np.argsort(values.sum(axis=1), kind="stable"):
        if not alive[idx]:
            continue
        p = values[idx]
        alive &= ~(np.all(p <= values, axis=1) & np.any(p < values, axis=1))
    return alive


def exact_front(landscape: RmnkLandscape, ref=None) -> ExactFront:
    """Pareto set and front by enumerating all ``2**N`` solutions."""
    ref = reference_point(landscape.n_objectives) if ref is None else np.asarray(ref, dtype=float)
    values = evaluate_all(landscape)
    mask = pareto_mask_exhaustive(values)
    idx = np.flatnonzero(mask)
    front = values[idx]
    return ExactFront(
        pareto_set=idx.tolist(),
        pareto_front=front,
        hv_ideal=hypervolume(front, ref),
        ref=ref,
        instance_id=landscape.instance_id,
    )


def cached_exact_front(landscape: RmnkLandscape, cache_dir, ref=None) -> ExactFront:
    """:func:`exact_front` with an on-disk JSON cache keyed by instance id and reference."""
    ref = reference_point(landscape.n_objectives) if ref is None else np.asarray(ref, dtype=float)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tag = hashlib.sha256(ref.tobytes()).hexdigest()[:8]
    path = cache_dir / f"{landscape.instance_id}-{tag}.front.json"
    if path.exists():
        return ExactFront.from_dict(json.loads(path.read_text()))
    ef = exact_front(landscape, ref)
    path.write_text(json.dumps(ef.to_dict()))
    return ef


def bitflip_components(pareto_set) -> int:
    """Connected components of the set under single-bit flips (union-find)."""
    members = [int(s) for s in pareto_set]
    if not members:
        raise InputError("pareto_set must be nonempty")
    position = {s: i for i, s in enumerate(members)}
    parent = list(range(len(members)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    width = max(members).bit_length()
    for s, i in position.items():
        for b in range(width):
            j = position.get(s ^ (1 << b))
            if j is not None:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    return len({find(i) for i in range(len(members))})


def lower_median(values) -> float:
    """Median that picks the lower middle element for even-length input."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise InputError("median of an empty sequence")
    return float(v[(v.size - 1) // 2])


def resolve_epistasis(k, n_vars: int) -> int:
    """Accept integers or the symbolic forms ``"N/2"`` and ``"N-1"``."""
    if isinstance(k, str):
        table = {"N/2": n_vars // 2, "N-1": n_vars - 1}
        if k not in table:
            raise InputError(f"unknown epistasis expression {k!r}")
        return table[k]
    return int(k)


@dataclass
class ConnectivityRow:
    n_objectives: int
    n_vars: int
    epistasis: int
    rho: float
    median_components: float
    counts: list[int] = field(default_factory=list)


def connectivity_sweep(grid: dict, seeds) -> list[ConnectivityRow]:
    """Lower-median bit-flip component count per ``(M, N, K, rho)`` grid cell.

    ``grid`` maps ``n_objectives``, ``n_vars``, ``epistasis`` and ``rho`` to
    lists; ``epistasis`` entries may be ``"N/2"`` or ``"N-1"``.
    """
    rows = []
    seeds = list(seeds)
    for m, n, k, rho in product(grid["n_objectives"], grid["n_vars"], grid["epistasis"], grid["rho"]):
        kk = resolve_epistasis(k, n)
        counts = []
        for seed in seeds:
            landscape = generate(RmnkConfig(n, m, kk, rho, seed))
            counts.append(bitflip_components(exact_front(landscape).pareto_set))
        rows.append(ConnectivityRow(m, n, kk, float(rho), lower_median(counts), counts))
    return rows


def write_connectivity_csv(rows: list[ConnectivityRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_objectives", "n_vars", "epistasis", "rho", "median_components", "counts"])
        for r in rows:
            w.writerow([r.n_objectives, r.n_vars, r.epistasis, repr(r.rho), repr(r.median_components), " ".join(map(str, r.counts))])
    return path


@dataclass
class NormalizedTrace:
    iteration: np.ndarray
    fevals: np.ndarray
    hv_norm: np.ndarray
    threshold: float
    first_iteration: int | None
    first_fevals: int | None

    @property
    def reached(self) -> bool:
        return self.first_iteration is not None


def threshold_crossing(iteration, fevals, hv_norm, threshold: float = THRESHOLD):
    """First ``(iteration, fevals)`` with ``hv_norm >= threshold`` or ``(None, None)``."""
    hits = np.flatnonzero(np.asarray(hv_norm) >= threshold)
    if hits.size == 0:
        return None, None
    i = hits[0]
    return int(iteration[i]), int(fevals[i])


def normalize_trace(trace: RunTrace | TraceTable, front: ExactFront, threshold: float = THRESHOLD) -> NormalizedTrace:
    """HV/HV_ideal per record plus first-crossing statistics for ``threshold``."""
    if isinstance(trace, RunTrace):
        trace_id, iteration, fevals, hv = trace.instance_id, trace.iterations, trace.fevals, trace.hv
    else:
        trace_id = trace.meta.get("instance_id", "")
        iteration, fevals, hv = trace.iteration, trace.fevals, trace.hv
    if trace_id and front.instance_id and trace_id != front.instance_id:
        raise InputError(f"trace instance {trace_id} does not match front instance {front.instance_id}")
    if front.hv_ideal <= 0:
        raise InputError("hv_ideal must be positive")
    hv_norm = np.asarray(hv, dtype=float) / front.hv_ideal
    if np.any(hv_norm > 1 + HV_NORM_SLACK):
        raise InputError(f"normalized hypervolume {hv_norm.max()} exceeds 1; wrong front or reference?")
    first_it, first_fe = threshold_crossing(iteration, fevals, hv_norm, threshold)
    return NormalizedTrace(iteration, fevals, hv_norm, threshold, first_it, first_fe)
