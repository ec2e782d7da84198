import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rmnkq.errors import InputError
from rmnkq.pareto import (
    ParetoArchive,
    archive_update,
    dominates,
    exclusive_hypervolume,
    hypervolume,
    non_dominated_filter,
    reference_point,
)

vectors = st.lists(st.integers(0, 4).map(float), min_size=3, max_size=3)


def brute_mask(points):
    pts = np.asarray(points, dtype=float)
    return np.array([not any(dominates(q, p) for q in pts) for p in pts])


def brute_hv(points, ref):
    """Inclusion-exclusion over all subsets (small sets only)."""
    pts = [np.asarray(p, dtype=float) for p in points if np.all(np.asarray(p) < ref)]
    total = 0.0
    for r in range(1, len(pts) + 1):
        for combo in itertools.combinations(pts, r):
            corner = np.max(combo, axis=0)
            total += (-1) ** (r + 1) * np.prod(ref - corner)
    return total


class TestDominates:
    def test_examples(self):
        assert dominates((1, 2), (1, 3))
        assert not dominates((1, 2), (2, 1)) and not dominates((2, 1), (1, 2))
        assert not dominates((1, 2), (1, 2))

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            dominates((1, 2), (1, 2, 3))

    @settings(max_examples=200)
    @given(vectors, vectors, vectors)
    def test_strict_partial_order(self, a, b, c):
        assert not dominates(a, a)
        assert not (dominates(a, b) and dominates(b, a))
        if dominates(a, b) and dominates(b, c):
            assert dominates(a, c)


class TestFilter:
    def test_example(self):
        assert non_dominated_filter([(1, 3), (2, 2), (3, 1), (2, 3)]).tolist() == [True, True, True, False]

    def test_identical(self):
        assert non_dominated_filter([(1, 1)] * 4).all()

    def test_random_3d(self, rng):
        pts = rng.random((50, 3))
        assert np.array_equal(non_dominated_filter(pts), brute_mask(pts))

    @settings(max_examples=100)
    @given(st.lists(vectors, min_size=1, max_size=25))
    def test_brute_and_idempotent(self, pts):
        mask = non_dominated_filter(pts)
        assert np.array_equal(mask, brute_mask(pts))
        kept = np.asarray(pts)[mask]
        assert non_dominated_filter(kept).all()


class TestHypervolume:
    def test_box(self):
        assert hypervolume([(0.25, 0.25)], (1, 1)) == pytest.approx(0.5625)

    def test_staircase(self):
        assert hypervolume([(1, 3), (2, 2), (3, 1)], (4, 4)) == 6.0

    def test_empty_and_outside(self):
        assert hypervolume(np.empty((0, 2)), (1, 1)) == 0.0
        assert hypervolume([(1.0, 0.5)], (1, 1)) == 0.0
        assert hypervolume([(2.0, 0.5), (0.5, 0.5)], (1, 1)) == pytest.approx(0.25)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            hypervolume([(0.1, 0.2)], (1, 1, 1))

    def test_single_objective(self):
        assert hypervolume([[0.3], [0.6]], [1.0]) == pytest.approx(0.7)

    @pytest.mark.parametrize("m", [2, 3, 4, 5])
    def test_inclusion_exclusion(self, m, rng):
        for _ in range(5):
            pts = rng.random((int(rng.integers(1, 9)), m))
            assert hypervolume(pts, np.ones(m)) == pytest.approx(brute_hv(pts, np.ones(m)), abs=1e-12)

    def test_monte_carlo_3d(self, rng):
        pts = rng.random((8, 3))
        samples = rng.random((10**6, 3))
        inside = np.zeros(len(samples), dtype=bool)
        for p in pts:
            inside |= np.all(samples >= p, axis=1)
        est, se = inside.mean(), inside.std() / np.sqrt(len(samples))
        assert abs(hypervolume(pts, np.ones(3)) - est) <= 3 * se + 1e-12

    def test_duplicates_and_dominated_ignored(self, rng):
        pts = rng.random((10, 3))
        base = hypervolume(pts, np.ones(3))
        extra = np.vstack([pts, pts[:3], pts[:2] + 0.01])
        assert hypervolume(extra, np.ones(3)) == pytest.approx(base, abs=1e-14)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(st.lists(st.integers(0, 63).map(lambda v: v / 64), min_size=3, max_size=3), min_size=1, max_size=12),
        st.lists(st.integers(0, 63).map(lambda v: v / 64), min_size=3, max_size=3),
    )
    def test_pareto_compliance(self, pts, p):
        ref = np.ones(3)
        before = hypervolume(pts, ref)
        after = hypervolume(pts + [p], ref)
        assert after >= before - 1e-12
        covered = any(np.all(np.asarray(q) <= p) for q in pts)
        if not covered:
            assert after > before

    def test_exclusive(self):
        assert exclusive_hypervolume((1, 1), [(2, 2)], (3, 3)) == pytest.approx(3.0)
        assert exclusive_hypervolume((2, 2), [(1, 1)], (3, 3)) == 0.0
        assert exclusive_hypervolume((4, 1), [], (3, 3)) == 0.0

    def test_reference_point(self):
        assert np.all(reference_point(3) == 1 + 1e-9)


class TestArchive:
    def test_dominating_insert(self):
        a = ParetoArchive(2, ref=(1, 1))
        a.insert("a", (0.5, 0.5))
        assert a.insert("b", (0.4, 0.4))
        assert a.solutions == ["b"]

    def test_dominated_insert(self):
        a = ParetoArchive(2)
        a.insert("a", (0.5, 0.5))
        assert not a.insert("b", (0.6, 0.6))
        assert a.solutions == ["a"]

    def test_duplicate_key_skipped(self):
        a = ParetoArchive(2)
        a.insert(1, (0.5, 0.5))
        assert not a.insert(1, (0.1, 0.1))
        assert np.allclose(a.get(1), (0.5, 0.5))

    def test_equal_images_retained(self):
        a = ParetoArchive(2)
        a.update([(1, (0.5, 0.5)), (2, (0.5, 0.5))])
        assert sorted(a.solutions) == [1, 2]

    def test_sequential_equals_batch(self, rng):
        pts = rng.random((200, 3))
        a = archive_update(ParetoArchive(3, ref=np.ones(3)), enumerate(pts))
        assert sorted(a.solutions) == np.flatnonzero(non_dominated_filter(pts)).tolist()
        assert a.hypervolume() == pytest.approx(hypervolume(pts, np.ones(3)), abs=1e-12)

    def test_order_independent_and_monotone(self, rng):
        pts = rng.random((80, 3))
        a, b = ParetoArchive(3, ref=np.ones(3)), ParetoArchive(3, ref=np.ones(3))
        last = 0.0
        for i, p in enumerate(pts):
            a.insert(i, p)
            assert a.hypervolume() >= last
            last = a.hypervolume()
        for i in rng.permutation(80):
            b.insert(int(i), pts[i])
        assert sorted(a.solutions) == sorted(b.solutions)
        assert a.hypervolume() == pytest.approx(b.hypervolume(), abs=1e-12)

    def test_no_member_dominates_another(self, rng):
        a = ParetoArchive(2)
        a.update(enumerate(rng.random((100, 2))))
        f = a.front
        assert non_dominated_filter(f).all()

    def test_explicit_ref(self, rng):
        pts = rng.random((20, 2))
        a = ParetoArchive(2)
        a.update(enumerate(pts))
        assert a.hypervolume((2, 2)) == pytest.approx(hypervolume(pts, (2, 2)))
        with pytest.raises(InputError):
            a.hypervolume()

    def test_csv(self, tmp_path):
        a = ParetoArchive(2)
        a.update([(0b011, (0.2, 0.7)), (0b100, (0.6, 0.1))])
        lines = a.to_csv(tmp_path / "a.csv", 3).read_text().splitlines()
        assert lines[0] == "bitstring,f_1,f_2"
        assert lines[1] == "110,0.2,0.7" and lines[2] == "001,0.6,0.1"
