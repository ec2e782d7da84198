"""Hybrid QMOO loop with Pareto archive and dominated-solution substitution.

One QMOO iteration prepares the ansatz state for a parameter vector, samples
it, selects candidate bitstrings, evaluates the ones that need evaluating,
and returns the negative hypervolume to a derivative-free optimizer (Powell).
Every call of the optimizer's objective is one iteration and one fresh
round of sampling.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import rng as _rng
from .errors import InputError
from .landscape import RmnkLandscape
from .pareto import ParetoArchive, hypervolume, non_dominated_filter, reference_point
from .pauli_map import hamiltonian_diagonals
from .quantum import AnsatzParams, ShotCounts, ranked_outcomes, run_ansatz, sample, top_candidates
from .trace import IterationRecord, RunTrace

# spawn-key tags for the run's random streams
_STREAM_INIT = 0
_STREAM_SAMPLING = 1


class StopOptimization(Exception):
    """Raised by an objective to end a :func:`powell_minimize` call early."""


@dataclass
class QmooHyperparams:
    n_shots: int = 1024
    n_most_prob: int = 20
    layers: int = 1
    use_archive: bool = True
    use_substitution: bool = True
    max_iterations: int = 300
    max_evaluations: int | None = None
    seed: int = 0
    init_scale: float = np.pi / 4
    xtol: float = 1e-4
    ftol: float = 1e-4
    stop_hv: float | None = None

    def __post_init__(self):
        for name in ("n_shots", "n_most_prob", "layers", "max_iterations"):
            if int(getattr(self, name)) < 1:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise InputError(f"max_evaluations must be positive, got {self.max_evaluations}")

    @property
    def evaluation_cap(self) -> int:
        """Largest number of fresh evaluations one iteration may spend."""
        return (2 if self.use_substitution else 1) * self.n_most_prob


@dataclass
class PowellResult:
    x: np.ndarray
    fun: float
    n_calls: int
    converged: bool


def powell_minimize(objective: Callable[[np.ndarray], float], x0, options: dict | None = None) -> PowellResult:
    """Powell's conjugate-direction method (scipy implementation).

    ``options`` go to :func:`scipy.optimize.minimize` (``xtol``, ``ftol``,
    ``maxiter``, ``maxfev``, ``direc``). If ``objective`` raises
    :class:`StopOptimization` the best point seen so far is returned with
    ``converged=False``.
    """
    best_x = np.array(x0, dtype=float)
    best_f = np.inf
    calls = 0

    def tracked(x):
        nonlocal best_x, best_f, calls
        f = float(objective(x))
        calls += 1
        if f < best_f:
            best_x, best_f = np.array(x, dtype=float), f
        return f

    try:
        res = minimize(tracked, np.asarray(x0, dtype=float), method="Powell", options=dict(options or {}))
    except StopOptimization:
        return PowellResult(best_x, best_f, calls, False)
    if res.fun <= best_f:
        best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    return PowellResult(best_x, best_f, calls, bool(res.success))


def substitute_candidates(
    counts: ShotCounts,
    n_most_prob: int,
    evaluate: Callable[[int], np.ndarray],
) -> list[tuple[int, np.ndarray]]:
    """Dominated-solution substitution.

    Walks the outcomes in descending-count order, evaluating each and keeping
    a running non-dominated set, until that set has ``n_most_prob`` members
    or ``min(len(outcomes), 2 * n_most_prob)`` outcomes were consumed.
    """
    if n_most_prob < 1:
        raise InputError(f"n_most_prob must be >= 1, got {n_most_prob}")
    stream = ranked_outcomes(counts)
    limit = min(len(stream), 2 * n_most_prob)
    keys: list[int] = []
    values: list[np.ndarray] = []
    i = 0
    while len(keys) < n_most_prob and i < limit:
        s = stream[i]
        keys.append(s)
        values.append(np.asarray(evaluate(s), dtype=float))
        mask = non_dominated_filter(np.array(values))
        keys = [k for k, keep in zip(keys, mask) if keep]
        values = [v for v, keep in zip(values, mask) if keep]
        i += 1
    return list(zip(keys, values))


class QmooRun:
    """Mutable state of one QMOO run: compiled Hamiltonians, archive and counters."""

    def __init__(
        self,
        landscape: RmnkLandscape,
        hyperparams: QmooHyperparams,
        ref=None,
        diagonals: np.ndarray | None = None,
    ):
        self.landscape = landscape
        self.hp = hyperparams
        self.ref = reference_point(landscape.n_objectives) if ref is None else np.asarray(ref, dtype=float)
        self.diagonals = hamiltonian_diagonals(landscape) if diagonals is None else diagonals
        self.archive = ParetoArchive(landscape.n_objectives, ref=self.ref)
        self.fevals = 0
        self.cache_hits = 0
        self.reevaluations = 0
        self.iteration = 0
        self.records: list[IterationRecord] = []
        self.best_hv = 0.0
        self.best_set: list[tuple[int, np.ndarray]] = []
        self.last_fresh = 0
        self._t0 = time.perf_counter()

    @property
    def n_params(self) -> int:
        return 2 * self.hp.layers * self.landscape.n_objectives

    def params_of(self, vector) -> AnsatzParams:
        return AnsatzParams.from_vector(vector, self.hp.layers, self.landscape.n_objectives)

    def evaluate(self, key: int) -> np.ndarray:
        """Classical evaluation of one bitstring; counts one function evaluation."""
        if key in self.archive:
            self.reevaluations += 1
        self.fevals += 1
        return self.landscape.evaluate_indices([key])[0]

    def _lookup_or_evaluate(self, key: int) -> np.ndarray:
        known = self.archive.get(key)
        if known is not None:
            self.cache_hits += 1
            return known
        return self.evaluate(key)

    def counts(self, vector) -> ShotCounts:
        state = run_ansatz(self.diagonals, self.params_of(vector))
        return sample(state, self.hp.n_shots, _rng.stream(self.hp.seed, _STREAM_SAMPLING, self.iteration))

    def step(self, vector) -> float:
        """One QMOO iteration; returns the negative hypervolume."""
        hp = self.hp
        before = self.fevals
        counts = self.counts(vector)
        if hp.use_archive:
            if hp.use_substitution:
                candidates = substitute_candidates(counts, hp.n_most_prob, self._lookup_or_evaluate)
            else:
                top = top_candidates(counts, hp.n_most_prob)
                fresh = [s for s in top if s not in self.archive]
                candidates = [(s, self.evaluate(s)) for s in fresh]
            self.archive.update(candidates)
            hv = self.archive.hypervolume()
        else:
            if hp.use_substitution:
                candidates = substitute_candidates(counts, hp.n_most_prob, self.evaluate)
            else:
                top = top_candidates(counts, hp.n_most_prob)
                values = [self.evaluate(s) for s in top]
                mask = non_dominated_filter(np.array(values))
                candidates = [(s, v) for s, v, keep in zip(top, values, mask) if keep]
            hv = hypervolume(np.array([v for _, v in candidates]), self.ref) if candidates else 0.0
            if hv > self.best_hv or not self.best_set:
                self.best_set = candidates
        self.best_hv = max(self.best_hv, hv)
        self.last_fresh = self.fevals - before
        self.records.append(
            IterationRecord(
                iteration=self.iteration,
                fevals=self.fevals,
                hv=float(hv),
                objective=-float(hv),
                params=[float(v) for v in vector],
                elapsed_ms=(time.perf_counter() - self._t0) * 1e3,
            )
        )
        self.iteration += 1
        return -float(hv)

    def exhausted(self) -> bool:
        if self.iteration >= self.hp.max_iterations:
            return True
        return self.hp.max_evaluations is not None and self.fevals >= self.hp.max_evaluations

    def budget_left(self) -> bool:
        if self.exhausted():
            return False
        if self.hp.stop_hv is not None and self.records and self.records[-1].hv >= self.hp.stop_hv:
            return False
        return True

    def objective(self, vector) -> float:
        if not self.budget_left():
            raise StopOptimization
        return self.step(np.asarray(vector, dtype=float))

    def final_set(self) -> tuple[list[int], np.ndarray]:
        if self.hp.use_archive:
            return self.archive.solutions, self.archive.front
        keys = [k for k, _ in self.best_set]
        front = np.array([v for _, v in self.best_set]).reshape(-1, self.landscape.n_objectives)
        return keys, front


def qmoo_iteration_archive(run: QmooRun, params) -> float:
    """One archive-mode iteration on ``run`` (thin alias of :meth:`QmooRun.step`)."""
    if isinstance(params, AnsatzParams):
        params = params.to_vector()
    return run.step(np.asarray(params, dtype=float))


def initial_parameters(hp: QmooHyperparams, n_objectives: int) -> np.ndarray:
    gen = _rng.stream(hp.seed, _STREAM_INIT)
    return gen.uniform(-hp.init_scale, hp.init_scale, size=2 * hp.layers * n_objectives)


def optimize(
    landscape: RmnkLandscape,
    hyperparams: QmooHyperparams,
    ref=None,
    diagonals: np.ndarray | None = None,
) -> RunTrace:
    """Run QMOO until the iteration or evaluation budget is spent.

    With ``stop_hv`` set the run also ends once an iteration reports at
    least that hypervolume.

    Powell is restarted from its best point whenever it reports convergence
    before the budget is used up.
    """
    run = QmooRun(landscape, hyperparams, ref=ref, diagonals=diagonals)
    x = initial_parameters(hyperparams, landscape.n_objectives)
    options = {"xtol": hyperparams.xtol, "ftol": hyperparams.ftol}
    while run.budget_left():
        result = powell_minimize(run.objective, x, options)
        x = result.x
        if result.n_calls == 0:
            break
    solutions, front = run.final_set()
    label = "qmoo" + ("+archive" if hyperparams.use_archive else "") + ("+substitution" if hyperparams.use_substitution else "")
    return RunTrace(
        algorithm=label,
        instance_id=landscape.instance_id,
        seed=hyperparams.seed,
        settings=asdict(hyperparams),
        records=run.records,
        solutions=list(solutions),
        front=front,
        budget_exhausted=run.exhausted(),
        cache_hits=run.cache_hits,
        reevaluations=run.reevaluations,
    )
