"""NSGA-II and NSGA-III over bitstrings, each feeding an unbounded Pareto archive.

Both use uniform crossover and per-bit flip mutation. Every evaluated
offspring is offered to the archive, and the run trace records the archive
hypervolume against the cumulative number of evaluations.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import rng as _rng
from .errors import InputError
from .landscape import RmnkLandscape
from .pareto import ParetoArchive, reference_point
from .trace import IterationRecord, RunTrace


@dataclass
class GaConfig:
    population_size: int | None = None
    crossover_probability: float = 1.0
    mutation_rate: float | None = None
    divisions_outer: int | None = None
    max_evaluations: int = 100_000
    seed: int = 0
    stop_hv: float | None = None

    def __post_init__(self):
        if self.population_size is not None and (self.population_size < 2 or self.population_size % 2):
            raise InputError(f"population_size must be even and >= 2, got {self.population_size}")
        if not 0.0 <= self.crossover_probability <= 1.0:
            raise InputError(f"crossover_probability must lie in [0, 1], got {self.crossover_probability}")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise InputError(f"mutation_rate must lie in [0, 1], got {self.mutation_rate}")
        if self.divisions_outer is not None and self.divisions_outer < 1:
            raise InputError(f"divisions_outer must be >= 1, got {self.divisions_outer}")
        if self.max_evaluations < 1:
            raise InputError("max_evaluations must be positive")


# -- sorting and diversity ---------------------------------------------------


def _domination_matrix(f: np.ndarray) -> np.ndarray:
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    return le & lt  # [i, j]: i dominates j


def fast_nondominated_sort(objectives) -> list[list[int]]:
    """Fronts of indices; front 0 is non-dominated, front k after removing fronts < k."""
    f = np.atleast_2d(np.asarray(objectives, dtype=float))
    n = f.shape[0]
    if n == 0:
        return []
    dom = _domination_matrix(f)
    dominated_count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(dominated_count == 0)
    while current.size:
        fronts.append(current.tolist())
        dominated_count = dominated_count - dom[current].sum(axis=0)
        dominated_count[current] = -1
        current = np.flatnonzero(dominated_count == 0)
    return fronts


def crowding_distance(objectives) -> np.ndarray:
    """NSGA-II crowding distance of each member of one front.

    Per objective, members are ordered by value (ties by the remaining
    coordinates), boundary members get infinity and interior members add
    the normalized gap between their neighbours.
    """
    f = np.atleast_2d(np.asarray(objectives, dtype=float))
    n, m = f.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for j in range(m):
        keys = [f[:, c] for c in reversed(range(m)) if c != j] + [f[:, j]]
        order = np.lexsort(keys)
        col = f[order, j]
        dist[order[0]] = dist[order[-1]] = np.inf
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def das_dennis(n_objectives: int, divisions: int) -> np.ndarray:
    """Uniform simplex lattice: all compositions of ``divisions`` into ``n_objectives`` parts, scaled by ``1/divisions``."""
    if n_objectives < 2 or divisions < 1:
        raise InputError("das_dennis needs n_objectives >= 2 and divisions >= 1")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return np.array(list(compositions(divisions, n_objectives)), dtype=float) / divisions


def nsga3_population_size(n_directions: int) -> int:
    return int(math.ceil(n_directions / 4) * 4)


# -- NSGA-III normalization and niching ---------------------------------------


def _normalize(f: np.ndarray, front0: np.ndarray) -> np.ndarray:
    ideal = f.min(axis=0)
    fp = f - ideal
    m = f.shape[1]
    weights = np.full((m, m), 1e-6) + np.eye(m) * (1 - 1e-6)
    asf = np.max(fp[:, None, :] / weights[None, :, :], axis=2)  # (n, m)
    extremes = fp[np.argmin(asf, axis=0)]
    intercepts = None
    try:
        b = np.linalg.solve(extremes, np.ones(m))
        with np.errstate(divide="ignore"):
            cand = 1.0 / b
        if np.all(np.isfinite(cand)) and np.all(cand > 1e-10):
            intercepts = cand
    except np.linalg.LinAlgError:
        pass
    if intercepts is None:
        intercepts = fp[front0].max(axis=0)
    intercepts = np.where(intercepts > 1e-10, intercepts, np.maximum(fp.max(axis=0), 1e-10))
    return fp / intercepts


def associate(normalized: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest reference line (lowest index on ties) and perpendicular distance per point."""
    w = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    proj = normalized @ w.T  # (n, H)
    residual = normalized[:, None, :] - proj[:, :, None] * w[None, :, :]
    perp = np.linalg.norm(residual, axis=2)
    idx = np.argmin(perp, axis=1)
    return idx, perp[np.arange(len(idx)), idx]


def _nsga3_select(f: np.ndarray, size: int, directions: np.ndarray, gen: np.random.Generator):
    """Indices of the ``size`` survivors plus their ranks and niche counts."""
    fronts = fast_nondominated_sort(f)
    rank = np.empty(f.shape[0], dtype=np.int64)
    for r, fr in enumerate(fronts):
        rank[fr] = r
    chosen: list[int] = []
    last: list[int] = []
    for fr in fronts:
        if len(chosen) + len(fr) <= size:
            chosen.extend(fr)
            if len(chosen) == size:
                break
        else:
            last = fr
            break
    pool = np.array(chosen + last, dtype=np.int64)
    # front 0 always opens the pool
    normalized = _normalize(f[pool], np.arange(len(fronts[0])))
    niche, dist = associate(normalized, directions)
    niche_of = dict(zip(pool.tolist(), niche.tolist()))
    dist_of = dict(zip(pool.tolist(), dist.tolist()))
    counts = np.zeros(len(directions), dtype=np.int64)
    for i in chosen:
        counts[niche_of[i]] += 1
    remaining = list(last)
    excluded = np.zeros(len(directions), dtype=bool)
    while len(chosen) < size:
        live = np.flatnonzero(~excluded)
        low = live[counts[live] == counts[live].min()]
        j = int(gen.choice(low))
        members = [i for i in remaining if niche_of[i] == j]
        if not members:
            excluded[j] = True
            continue
        if counts[j] == 0:
            pick = min(members, key=lambda i: (dist_of[i], i))
        else:
            pick = members[int(gen.integers(len(members)))]
        chosen.append(pick)
        remaining.remove(pick)
        counts[j] += 1
    survivors = np.array(chosen, dtype=np.int64)
    survivor_niche = np.array([niche_of[i] for i in chosen])
    niche_count = counts[survivor_niche]
    return survivors, rank[survivors], niche_count


# -- variation -----------------------------------------------------------------


def _tournament(gen: np.random.Generator, primary: np.ndarray, secondary: np.ndarray, n: int) -> np.ndarray:
    """Binary tournaments: lower ``primary`` wins, then lower ``secondary``, then a coin flip."""
    a = gen.integers(len(primary), size=n)
    b = gen.integers(len(primary), size=n)
    coin = gen.random(n) < 0.5
    a_better = (primary[a] < primary[b]) | ((primary[a] == primary[b]) & (secondary[a] < secondary[b]))
    tie = (primary[a] == primary[b]) & (secondary[a] == secondary[b])
    return np.where(a_better | (tie & coin), a, b)


def _variation(gen, parents: np.ndarray, pc: float, pm: float) -> np.ndarray:
    n, length = parents.shape
    p1, p2 = parents[0::2], parents[1::2]
    do_cross = gen.random(p1.shape[0]) < pc
    swap = (gen.random(p1.shape) < 0.5) & do_cross[:, None]
    c1 = np.where(swap, p2, p1)
    c2 = np.where(swap, p1, p2)
    children = np.empty_like(parents)
    children[0::2], children[1::2] = c1, c2
    flips = gen.random(children.shape) < pm
    return children ^ flips.astype(children.dtype)


def _keys(bits: np.ndarray) -> np.ndarray:
    return (bits.astype(np.int64) << np.arange(bits.shape[1], dtype=np.int64)).sum(axis=1)


class _Evaluator:
    def __init__(self, landscape: RmnkLandscape, ref):
        self.landscape = landscape
        self.archive = ParetoArchive(landscape.n_objectives, ref=ref)
        self.fevals = 0

    def __call__(self, bits: np.ndarray) -> np.ndarray:
        f = self.landscape.evaluate_bits(bits)
        self.fevals += bits.shape[0]
        self.archive.update(zip(_keys(bits).tolist(), f))
        return f


def _run(landscape, config: GaConfig, ref, algorithm: str) -> RunTrace:
    n = landscape.n_vars
    m = landscape.n_objectives
    ref = reference_point(m) if ref is None else np.asarray(ref, dtype=float)
    gen = _rng.stream(config.seed)
    pm = 1.0 / n if config.mutation_rate is None else config.mutation_rate
    if algorithm == "nsga3":
        if m < 2:
            raise InputError("NSGA-III needs at least two objectives")
        directions = das_dennis(m, config.divisions_outer or 12)
        size = config.population_size or nsga3_population_size(len(directions))
    else:
        directions = None
        size = config.population_size or 20
    evaluator = _Evaluator(landscape, ref)
    t0 = time.perf_counter()
    records: list[IterationRecord] = []

    def record(generation):
        hv = evaluator.archive.hypervolume()
        records.append(IterationRecord(generation, evaluator.fevals, hv, -hv, None, (time.perf_counter() - t0) * 1e3))

    pop = gen.integers(0, 2, size=(size, n), dtype=np.int8)
    f = evaluator(pop)
    if directions is None:
        rank, crowd = _nsga2_rank_crowd(f)
        secondary = -crowd
    else:
        _, rank, secondary = _nsga3_select(f, size, directions, gen)
    record(0)
    generation = 0
    while evaluator.fevals < config.max_evaluations:
        if config.stop_hv is not None and records[-1].hv >= config.stop_hv:
            break
        generation += 1
        parents = pop[_tournament(gen, rank, secondary, size)]
        children = _variation(gen, parents, config.crossover_probability, pm)
        fc = evaluator(children)
        all_bits = np.concatenate([pop, children])
        all_f = np.concatenate([f, fc])
        if directions is None:
            survivors = _nsga2_select(all_f, size)
            pop, f = all_bits[survivors], all_f[survivors]
            rank, crowd = _nsga2_rank_crowd(f)
            secondary = -crowd
        else:
            survivors, rank, secondary = _nsga3_select(all_f, size, directions, gen)
            pop, f = all_bits[survivors], all_f[survivors]
        record(generation)
    settings = asdict(config)
    settings.update(algorithm=algorithm, population_size=size, mutation_rate=pm)
    if directions is not None:
        settings.update(divisions_outer=config.divisions_outer or 12, n_directions=len(directions))
    return RunTrace(
        algorithm=algorithm + "+archive",
        instance_id=landscape.instance_id,
        seed=config.seed,
        settings=settings,
        records=records,
        solutions=evaluator.archive.solutions,
        front=evaluator.archive.front,
        budget_exhausted=evaluator.fevals >= config.max_evaluations,
        final_population=pop,
    )


def _nsga2_rank_crowd(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rank = np.empty(f.shape[0], dtype=np.int64)
    crowd = np.empty(f.shape[0])
    for r, fr in enumerate(fast_nondominated_sort(f)):
        rank[fr] = r
        crowd[fr] = crowding_distance(f[fr])
    return rank, crowd


def _nsga2_select(f: np.ndarray, size: int) -> np.ndarray:
    chosen: list[int] = []
    for fr in fast_nondominated_sort(f):
        if len(chosen) + len(fr) <= size:
            chosen.extend(fr)
        else:
            d = crowding_distance(f[fr])
            order = np.argsort(-d, kind="stable")
            chosen.extend(np.asarray(fr)[order[: size - len(chosen)]].tolist())
        if len(chosen) == size:
            break
    return np.array(chosen, dtype=np.int64)


def nsga2_run(landscape: RmnkLandscape, config: GaConfig, ref=None) -> RunTrace:
    """NSGA-II with an unbounded archive; population defaults to 20."""
    return _run(landscape, config, ref, "nsga2")


def nsga3_run(landscape: RmnkLandscape, config: GaConfig, ref=None) -> RunTrace:
    """NSGA-III with an unbounded archive.

    Reference directions come from :func:`das_dennis` with
    ``divisions_outer`` (default 12); without an explicit population size the
    direction count is rounded up to a multiple of four.
    """
    return _run(landscape, config, ref, "nsga3")
