import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsphard.core import (
    Instance,
    RngStream,
    convex_hull,
    cut_to_boundary,
    derive_seed,
    distance_matrix,
    minimum_spanning_tree,
    normal_mutation,
    random_instance,
    regular_polygon,
    rescale,
    round_to_grid,
    tour_length,
    uniform_crossover,
    uniform_mutation,
)

from conftest import brute_mst_weight, cross, extreme_points

coords = st.floats(0, 1, allow_nan=False)
point_lists = st.lists(st.tuples(coords, coords), min_size=3, max_size=12)


def test_rng_stream_paths():
    a = RngStream(5, (1, 2)).generator().random(4)
    b = RngStream(5).child(1, 2).generator().random(4)
    c = RngStream(5, (1, 3)).generator().random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(5, 1) == derive_seed(5, 1) != derive_seed(5, 2)


def test_random_instance():
    inst = random_instance(5, 3)
    assert inst.n == 5
    assert np.all((inst.points >= 0) & (inst.points < 1))
    assert random_instance(5, 3) == inst
    big = random_instance(10000, 11)
    assert np.all(np.abs(big.points.mean(axis=0) - 0.5) < 0.02)
    with pytest.raises(ValueError):
        random_instance(0, 1)


def test_instance_is_read_only():
    inst = random_instance(4, 0)
    with pytest.raises(ValueError):
        inst.points[0, 0] = 2.0


def test_rescale_examples():
    assert np.allclose(rescale(Instance([[2, 4], [4, 8]])).points, [[0, 0], [1, 1]])
    sq = Instance([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert rescale(sq) == sq
    r = rescale(Instance([[0.2, 0.2], [0.2, 0.8], [0.6, 0.5]]))
    assert np.allclose(r.points[:, 0], [0, 0, 1])


def test_rescale_degenerate_axis():
    r = rescale(Instance([[0.3, 0.1], [0.3, 0.9], [0.3, 0.4]]))
    assert np.all(r.points[:, 0] == 0.5)
    assert r.meta["degenerate_axes"] == [0]
    assert r.points[:, 1].min() == 0 and r.points[:, 1].max() == 1


@given(point_lists)
def test_rescale_idempotent(pts):
    inst = Instance(pts)
    r = rescale(inst)
    assert np.all((r.points >= 0) & (r.points <= 1))
    assert np.allclose(rescale(r).points, r.points, atol=1e-12)


def test_round_examples():
    r = round_to_grid(Instance([[0.123, 0.456], [1.0, 0.0]]), 100)
    assert np.allclose(r.points, [[0.125, 0.455], [0.995, 0.005]])
    with pytest.raises(ValueError):
        round_to_grid(Instance([[0.5, 0.5]]), 0)


def test_round_idempotent_random():
    for s in range(50):
        r = round_to_grid(random_instance(20, s), 100)
        assert round_to_grid(r, 100) == r
        k = r.points * 100 - 0.5
        assert np.allclose(k, np.round(k))


@given(point_lists, st.integers(1, 200))
def test_round_cell_centres(pts, cells):
    r = round_to_grid(Instance(pts), cells)
    k = np.round(r.points * cells - 0.5)
    assert np.all((k >= 0) & (k < cells))
    assert np.allclose(r.points, (k + 0.5) / cells)


def test_normal_mutation():
    inst = random_instance(1000, 1)
    assert normal_mutation(inst, 0.0, 0.025, 2) == inst
    assert normal_mutation(inst, 1.0, 0.0, 2) == inst
    m = normal_mutation(inst, 1.0, 0.025, 2)
    disp = np.abs(m.points - inst.points).mean()
    expect = 0.025 * math.sqrt(2 / math.pi)
    assert abs(disp - expect) < 0.1 * expect


def test_uniform_mutation():
    inst = random_instance(25, 1)
    assert uniform_mutation(inst, 0.0, 3) == inst
    full = uniform_mutation(random_instance(5000, 0), 1.0, 4)
    # uniformity: KS distance against U(0,1) per axis
    for axis in range(2):
        x = np.sort(full.points[:, axis])
        ks = np.max(np.abs(x - np.arange(1, len(x) + 1) / len(x)))
        assert ks < 1.63 / math.sqrt(len(x))  # ~1% level
    gen = np.random.default_rng(9)
    counts = [np.sum(np.any(uniform_mutation(inst, 0.001, gen).points != inst.points, axis=1)) for _ in range(10000)]
    assert abs(np.mean(counts) - 0.025) < 0.01


def test_uniform_crossover():
    a, b = random_instance(20, 1), random_instance(20, 2)
    assert uniform_crossover(a, a, 0) == a
    gen = np.random.default_rng(0)
    from_a = 0
    for _ in range(10000 // 20):
        c = uniform_crossover(a, b, gen)
        in_a = np.all(c.points == a.points, axis=1)
        in_b = np.all(c.points == b.points, axis=1)
        assert np.all(in_a | in_b)
        from_a += in_a.sum()
    assert abs(from_a / 10000 - 0.5) < 0.02
    with pytest.raises(ValueError):
        uniform_crossover(a, random_instance(5, 0), 0)


def test_cut_to_boundary():
    c = cut_to_boundary(Instance([[1.03, 0.5], [-0.01, 2], [0.3, 0.7]]))
    assert np.array_equal(c.points, [[1.0, 0.5], [0.0, 1.0], [0.3, 0.7]])


def test_distance_matrix(square):
    dm = distance_matrix(square)
    assert dm[0, 1] == 1 and dm[0, 2] == pytest.approx(math.sqrt(2))
    assert distance_matrix(Instance([[0, 0], [0, 0.5], [0, 1]]))[0, 2] == 1
    for s in range(20):
        dm = distance_matrix(random_instance(12, s))
        assert np.array_equal(dm, dm.T)
        assert np.all(np.diag(dm) == 0)


def test_tour_length(square):
    dm = distance_matrix(square)
    assert tour_length(dm, [0, 1, 2, 3]) == 4
    assert tour_length(dm, [2, 3, 0, 1]) == 4
    assert tour_length(dm, [3, 2, 1, 0]) == 4
    with pytest.raises(ValueError):
        tour_length(dm, [0, 1, 1, 2])
    inst = random_instance(8, 4)
    dm = distance_matrix(inst)
    gen = np.random.default_rng(0)
    for _ in range(100):
        t = gen.permutation(8)
        ref = sum(math.dist(inst.points[t[i]], inst.points[t[(i + 1) % 8]]) for i in range(8))
        assert tour_length(dm, t) == pytest.approx(ref, abs=1e-12)
        assert tour_length(dm, np.roll(t, 3)) == pytest.approx(ref, abs=1e-12)
        assert tour_length(dm, t[::-1]) == pytest.approx(ref, abs=1e-12)


def test_mst_examples(square):
    assert minimum_spanning_tree(distance_matrix(square)).weight == 3
    m = minimum_spanning_tree(distance_matrix(Instance([[0, 0], [0.1, 0], [0.2, 0]])))
    assert list(m.depth) == [0, 1, 2]


def test_mst_vs_exhaustive():
    for s in range(5):
        dm = distance_matrix(random_instance(7, s))
        m = minimum_spanning_tree(dm)
        assert m.weight == pytest.approx(brute_mst_weight(dm), abs=1e-12)
        assert len(m.edges) == 6
        for p, c, w in m.edges:
            assert m.depth[c] == m.depth[p] + 1
            assert w == dm[p, c]
        assert m.depth[0] == 0


def test_hull_examples(square):
    idx, area = convex_hull(square)
    assert area == 1 and len(idx) == 4
    idx, area = convex_hull(Instance(list(square.points) + [[0.5, 0.5]]))
    assert area == 1 and len(idx) == 4
    idx, area = convex_hull(Instance([[0, 0], [0.5, 0], [1, 0], [0.25, 0]]))
    assert area == 0 and sorted(idx) == [0, 2]
    # collinear edge points are not members
    idx, _ = convex_hull(Instance([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]]))
    assert 1 not in idx


def test_hull_ccw():
    inst = random_instance(30, 2)
    idx, _ = convex_hull(inst)
    p = inst.points[idx]
    for i in range(len(p)):
        a, b, c = p[i], p[(i + 1) % len(p)], p[(i + 2) % len(p)]
        assert cross(b - a, c - b) > 0


def test_hull_vs_extreme_points():
    for s in range(10):
        inst = random_instance(8, s)
        idx, area = convex_hull(inst)
        assert sorted(idx) == extreme_points(inst.points)
        # fan triangulation from the first hull vertex
        p = inst.points[idx]
        fan = sum(abs(cross(p[i] - p[0], p[i + 1] - p[0])) / 2 for i in range(1, len(p) - 1))
        assert area == pytest.approx(fan, abs=1e-12)


@settings(max_examples=50)
@given(point_lists, st.randoms(use_true_random=False))
def test_hull_area_permutation_invariant(pts, rnd):
    inst = Instance(pts)
    perm = list(range(len(pts)))
    rnd.shuffle(perm)
    _, a1 = convex_hull(inst)
    _, a2 = convex_hull(Instance(inst.points[perm]))
    assert a1 == pytest.approx(a2, abs=1e-12)


def test_regular_polygon():
    hexagon = regular_polygon(6)
    dm = distance_matrix(hexagon)
    assert tour_length(dm, range(6)) == pytest.approx(6.0)
    assert len(convex_hull(hexagon)[0]) == 6
