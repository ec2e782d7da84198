from math import comb

import numpy as np
import pytest

from rmnkq import rng as _rng
from rmnkq.analysis import exact_front
from rmnkq.errors import InputError
from rmnkq.evolutionary import (
    GaConfig,
    associate,
    crowding_distance,
    das_dennis,
    fast_nondominated_sort,
    nsga2_run,
    nsga3_population_size,
    nsga3_run,
)
from rmnkq.landscape import RmnkConfig, generate
from rmnkq.pareto import non_dominated_filter


class TestSorting:
    def test_single_front(self):
        pts = [(0, 3), (1, 2), (2, 1), (3, 0)]
        assert fast_nondominated_sort(pts) == [[0, 1, 2, 3]]

    def test_chain(self):
        pts = [(3, 3), (1, 1), (2, 2), (0, 0)]
        assert fast_nondominated_sort(pts) == [[3], [1], [2], [0]]

    def test_peel_off_oracle(self, rng):
        pts = rng.integers(0, 6, size=(40, 3)).astype(float)
        fronts = fast_nondominated_sort(pts)
        remaining = np.arange(40)
        for front in fronts:
            mask = non_dominated_filter(pts[remaining])
            assert sorted(front) == sorted(remaining[mask].tolist())
            remaining = remaining[~mask]
        assert remaining.size == 0
        assert sorted(i for f in fronts for i in f) == list(range(40))


class TestCrowding:
    def test_two_members(self):
        assert np.all(np.isinf(crowding_distance([(0, 1), (1, 0)])))

    def test_collinear(self):
        d = crowding_distance([(0, 2), (1, 1), (2, 0)])
        assert np.isinf(d[0]) and np.isinf(d[2]) and d[1] == pytest.approx(2.0)

    def test_permutation_invariant(self, rng):
        pts = rng.random((15, 3))
        d = crowding_distance(pts)
        perm = rng.permutation(15)
        assert np.array_equal(crowding_distance(pts[perm]), d[perm])

    def test_permutation_invariant_with_ties(self, rng):
        pts = rng.integers(0, 4, size=(20, 2)).astype(float)
        pts = np.unique(pts, axis=0)
        d = crowding_distance(pts)
        perm = rng.permutation(len(pts))
        assert np.array_equal(crowding_distance(pts[perm]), d[perm])


class TestDasDennis:
    def test_vertices(self):
        assert sorted(map(tuple, das_dennis(3, 1))) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]

    @pytest.mark.parametrize("m, p", [(3, 12), (2, 5), (5, 4), (3, 4)])
    def test_count_and_lattice(self, m, p):
        w = das_dennis(m, p)
        assert len(w) == comb(p + m - 1, m - 1)
        assert np.allclose(w.sum(axis=1), 1.0) and np.all(w >= 0)
        assert np.allclose(w * p, np.round(w * p))
        assert len(np.unique(w, axis=0)) == len(w)

    def test_population_rule(self):
        assert len(das_dennis(3, 12)) == 91 and nsga3_population_size(91) == 92
        assert nsga3_population_size(92) == 92

    def test_invalid(self):
        with pytest.raises(InputError):
            das_dennis(1, 3)
        with pytest.raises(InputError):
            das_dennis(3, 0)


class TestAssociate:
    def test_nearest_line_lowest_index_on_ties(self):
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
        idx, dist = associate(np.array([[1.0, 0.1], [0.1, 1.0], [0.5, 0.5], [1.0, 1.0], [0.0, 0.0]]), dirs)
        assert idx.tolist() == [0, 1, 2, 2, 0]
        assert dist[2] == pytest.approx(0.0, abs=1e-15)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(population_size=3),
            dict(population_size=0),
            dict(crossover_probability=1.5),
            dict(mutation_rate=-0.1),
            dict(divisions_outer=0),
            dict(max_evaluations=0),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(InputError):
            GaConfig(**kwargs)


@pytest.mark.parametrize("run", [nsga2_run, nsga3_run])
class TestRuns:
    def test_no_variation_keeps_population(self, run):
        L = generate(RmnkConfig(10, 3, 1, 0.0, 2))
        config = GaConfig(population_size=20, crossover_probability=0.0, mutation_rate=0.0, max_evaluations=21, seed=4)
        trace = run(L, config)
        initial = _rng.stream(4).integers(0, 2, size=(20, 10), dtype=np.int8)
        keys = (initial.astype(np.int64) << np.arange(10)).sum(axis=1)
        final = (trace.final_population.astype(np.int64) << np.arange(10)).sum(axis=1)
        assert set(final.tolist()) <= set(keys.tolist())
        assert len(trace.records) == 2
        values = L.evaluate_indices(keys)
        expected = {int(k) for k, keep in zip(keys, non_dominated_filter(values)) if keep}
        assert set(trace.solutions) == expected

    def test_monotone_and_budget(self, run):
        L = generate(RmnkConfig(12, 3, 2, 0.0, 1))
        trace = run(L, GaConfig(population_size=20, max_evaluations=1500, seed=0))
        assert np.all(np.diff(trace.hv) >= 0)
        assert 1500 <= trace.total_fevals <= 1500 + 20
        assert trace.budget_exhausted
        assert non_dominated_filter(trace.front).all()

    def test_deterministic(self, run):
        L = generate(RmnkConfig(10, 2, 1, 0.0, 1))
        config = GaConfig(population_size=12, max_evaluations=400, seed=3)
        a, b = run(L, config), run(L, config)
        assert a.csv_text() == b.csv_text() and a.solutions == b.solutions

    def test_archive_within_ideal(self, run):
        L = generate(RmnkConfig(10, 3, 1, 0.0, 5))
        ef = exact_front(L)
        trace = run(L, GaConfig(population_size=20, max_evaluations=3000, seed=1))
        assert trace.final_hv <= ef.hv_ideal + 1e-12


def test_nsga3_default_population():
    L = generate(RmnkConfig(8, 3, 1, 0.0, 1))
    trace = nsga3_run(L, GaConfig(max_evaluations=200, divisions_outer=4))
    assert trace.settings["population_size"] == nsga3_population_size(comb(6, 2)) == 16
    assert trace.settings["n_directions"] == 15


def test_nsga3_converges_small():
    hits = 0
    for seed in range(5):
        L = generate(RmnkConfig(10, 3, 1, 0.0, seed))
        ef = exact_front(L)
        trace = nsga3_run(L, GaConfig(max_evaluations=20000, seed=seed, stop_hv=0.95 * ef.hv_ideal))
        hits += trace.final_hv >= 0.95 * ef.hv_ideal
    assert hits >= 4


def test_nsga3_rejects_single_objective():
    with pytest.raises(InputError):
        nsga3_run(generate(RmnkConfig(6, 1, 1)), GaConfig(max_evaluations=50))
