import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsphard.core import CapacityError, Instance, distance_matrix, random_instance, regular_polygon, tour_length
from tsphard.solver import (
    brute_force_tour,
    compute_fitness,
    exact_tour,
    improving_exchanges,
    random_tour,
    two_opt,
)


def naive_optimum(dm):
    n = dm.shape[0]
    return min(tour_length(dm, (0,) + p) for p in itertools.permutations(range(1, n)))


def test_random_tour_uniform():
    assert sorted(random_tour(3, 0)) == [0, 1, 2]
    assert np.array_equal(random_tour(9, 4), random_tour(9, 4))
    gen = np.random.default_rng(1)
    counts = Counter(tuple(random_tour(4, gen)) for _ in range(60000))
    assert len(counts) == 24
    for c in counts.values():
        assert abs(c / 60000 - 1 / 24) < 0.2 / 24


def test_two_opt_uncrosses_square(square):
    dm = distance_matrix(square)
    r = two_opt(dm, [0, 2, 1, 3])
    assert r.length == pytest.approx(4) and r.iterations == 1
    again = two_opt(dm, r.tour)
    assert again.iterations == 0 and list(again.tour) == list(r.tour)


def test_two_opt_is_deterministic():
    dm = distance_matrix(random_instance(15, 3))
    start = random_tour(15, 1)
    a, b = two_opt(dm, start), two_opt(dm, start)
    assert list(a.tour) == list(b.tour) and a.length == b.length and a.iterations == b.iterations


def test_two_opt_matches_python_reference():
    """Best-improvement with lexicographic ties, written out plainly."""

    def ref(dm, tour):
        tour = list(tour)
        n = len(tour)
        swaps = 0
        while True:
            best, arg = 1e-12, None
            for i in range(n - 2):
                for j in range(i + 2, n - (i == 0)):
                    a, b, c, d = tour[i], tour[i + 1], tour[j], tour[(j + 1) % n]
                    g = dm[a, b] + dm[c, d] - dm[a, c] - dm[b, d]
                    if g > best:
                        best, arg = g, (i, j)
            if arg is None:
                return tour, swaps
            i, j = arg
            tour[i + 1 : j + 1] = tour[i + 1 : j + 1][::-1]
            swaps += 1

    for s in range(10):
        dm = distance_matrix(random_instance(11, s))
        start = random_tour(11, s + 100)
        t, k = ref(dm, start)
        r = two_opt(dm, start)
        assert list(r.tour) == t and r.iterations == k


def test_two_opt_result_is_locally_optimal():
    for s in range(20):
        n = 9
        dm = distance_matrix(random_instance(n, s))
        r = two_opt(dm, random_tour(n, s))
        assert improving_exchanges(dm, r.tour) == []
        assert r.length >= naive_optimum(dm) - 1e-9
        assert r.length == pytest.approx(tour_length(dm, r.tour), abs=1e-12)


def test_exact_examples(square):
    assert exact_tour(distance_matrix(square)).length == pytest.approx(4)
    assert exact_tour(distance_matrix(regular_polygon(6))).length == pytest.approx(6)
    with pytest.raises(CapacityError, match="20"):
        exact_tour(np.zeros((21, 21)))
    with pytest.raises(CapacityError, match="10"):
        brute_force_tour(np.zeros((11, 11)))


def test_exact_vs_brute_force():
    for s in range(50):
        dm = distance_matrix(random_instance(8, s))
        e, b = exact_tour(dm), brute_force_tour(dm)
        assert e.length == pytest.approx(b.length, abs=1e-9)
        assert e.length == pytest.approx(tour_length(dm, e.tour), abs=1e-12)
    dm = distance_matrix(random_instance(9, 0))
    assert exact_tour(dm).length == pytest.approx(naive_optimum(dm), abs=1e-9)


def test_brute_force_small():
    dm = distance_matrix(Instance([[0, 0], [1, 0], [0, 1]]))
    r = brute_force_tour(dm)
    assert r.tour[0] == 0
    assert r.length == pytest.approx(2 + math.sqrt(2))


def test_fitness_convex_and_bounds():
    fit = compute_fitness(regular_polygon(12, 0.5, (0.5, 0.5)), 30, 0)
    assert fit.ratio == 1.0 and np.all(fit.lengths == fit.optimal_length)
    fit = compute_fitness(random_instance(12, 5), 100, 1)
    assert 1.0 <= fit.ratio <= 1.3
    assert fit.repetitions == 100 and len(fit.swaps) == 100
    assert fit.ratio == pytest.approx(np.mean(fit.lengths) / fit.optimal_length, abs=1e-12)
    d = fit.to_dict()
    assert set(d) >= {"ratio", "optimal_length", "lengths", "swaps"}


def test_fitness_reproducible_and_capped():
    inst = random_instance(10, 8)
    assert compute_fitness(inst, 20, 3).ratio == compute_fitness(inst, 20, 3).ratio
    with pytest.raises(CapacityError):
        compute_fitness(random_instance(21, 0), 2, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 10), st.integers(0, 10**6))
def test_two_opt_never_beats_optimum(n, seed):
    dm = distance_matrix(random_instance(n, seed))
    r = two_opt(dm, random_tour(n, seed + 1))
    assert r.length >= exact_tour(dm).length - 1e-9
    assert sorted(r.tour) == list(range(n))
