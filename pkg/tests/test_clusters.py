import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contactscale.clusters import (ClusterSet, MarkedMeasure, MesoGrid, box_counts_from_anchors,
                                   box_statistics, extract_clusters, marked_measure)
from contactscale.errors import ParameterError
from contactscale.lattice import Box
from contactscale.process import CanonicalConfig, Configuration


def oracle_components(sites, R, norm):
    """All-pairs union-find."""
    sites = list(sites)
    parent = list(range(len(sites)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    dist = (lambda a, b: max(abs(x - y) for x, y in zip(a, b))) if norm == "sup" else \
        (lambda a, b: sum(abs(x - y) for x, y in zip(a, b)))
    for i in range(len(sites)):
        for j in range(i):
            if dist(sites[i], sites[j]) < R:
                parent[find(i)] = find(j)
    groups = {}
    for i, s in enumerate(sites):
        groups.setdefault(find(i), set()).add(s)
    return sorted(tuple(sorted(g)) for g in groups.values())


def as_sets(cs: ClusterSet):
    return sorted(tuple(sorted(tuple(a + b for a, b in zip(anchor, z)) for z in mark.sites))
                  for anchor, mark in cs)


def test_example_components():
    cs = extract_clusters([(0,), (2,), (100,)], 3)
    assert cs.components == [((0,), CanonicalConfig(((0,), (2,)))),
                             ((100,), CanonicalConfig(((0,),)))]
    assert cs.max_diameter() == 2
    # distance exactly R does not link
    assert len(extract_clusters([(0,), (3,)], 3)) == 2


def test_empty_and_errors():
    assert len(extract_clusters([], 5)) == 0
    with pytest.raises(ParameterError):
        extract_clusters([(0,)], 0)
    with pytest.raises(ParameterError):
        extract_clusters([(0,)], 2, norm="l2")


def test_configuration_input():
    conf = Configuration.of(Box(2, 5), [(0, 0), (1, 1), (5, 5)])
    cs = extract_clusters(conf, 2)
    assert [a for a, _ in cs] == [(0, 0), (5, 5)]
    assert extract_clusters(conf, 2, norm="l1").sites() == sorted(conf.sites)


def test_matches_quadratic_oracle(rng):
    for _ in range(500):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(0, 51))
        span = int(rng.integers(3, 40))
        sites = {tuple(int(c) for c in rng.integers(-span, span + 1, d)) for _ in range(n)}
        R = int(rng.integers(1, 8))
        norm = str(rng.choice(["sup", "l1"]))
        cs = extract_clusters(sorted(sites), R, norm)
        assert as_sets(cs) == oracle_components(sites, R, norm)
        assert cs.sites() == sorted(sites)
        for anchor, mark in cs:
            assert mark.sites[0] == (0,) * d and anchor == min(
                tuple(a + b for a, b in zip(anchor, z)) for z in mark.sites)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-30, 30), st.integers(-30, 30)), max_size=60, unique=True),
       st.integers(1, 6), st.randoms(use_true_random=False))
def test_permutation_invariance(sites, R, rnd):
    shuffled = list(sites)
    rnd.shuffle(shuffled)
    assert extract_clusters(sites, R).components == extract_clusters(shuffled, R).components
    assert extract_clusters(np.array(shuffled).reshape(-1, 2), R).components == \
        extract_clusters(sites, R).components


def test_marked_measure_examples():
    empty = marked_measure(ClusterSet([], 3), 0.5, 2.0, K=1.0, d=1)
    assert len(empty) == 0
    cs = extract_clusters([(0,), (2,), (100,)], 3)
    m = marked_measure(cs, alpha_hat=np.log(10), t=1.0, K=5.0)
    # scale 1/10: 100 -> 10 is outside [-5, 5]
    assert len(m) == 1 and m.locations.tolist() == [[0.0]]
    unit = marked_measure(cs, alpha_hat=0.3, t=0.0, K=1e9)
    assert np.array_equal(unit.locations, unit.anchors) and unit.scale == 1.0
    with pytest.raises(ParameterError):
        marked_measure(cs, 0.0, 1.0, 5.0)
    back = MarkedMeasure.from_jsonl(unit.to_jsonl(), unit.scale, unit.K)
    assert back.marks == unit.marks and np.array_equal(back.anchors, unit.anchors)


def test_box_statistics_examples():
    grid = MesoGrid.with_boxes(R=2, d=1, n_per_axis=5)
    empty = marked_measure(ClusterSet([], 2), 1.0, 0.0, K=100.0, d=1)
    bc = box_statistics(empty, grid)
    assert bc.total == 0 and bc.voids.all()
    one = marked_measure(extract_clusters([(5,)], 2), 1.0, 0.0, K=100.0)
    bc = box_statistics(one, grid)
    # boxes are centred at 5*j, j = -2..2 -> index j + 2
    assert bc.counts.tolist() == [0, 0, 0, 1, 0]
    with pytest.raises(ParameterError):
        MesoGrid.with_boxes(2, 1, 4)


def test_box_count_conservation(rng):
    for _ in range(50):
        d = int(rng.integers(1, 3))
        R = int(rng.integers(1, 5))
        grid = MesoGrid.with_boxes(R, d, int(rng.choice([1, 3, 5, 7])))
        hw = grid.half_width
        anchors = np.unique(rng.integers(-2 * hw, 2 * hw + 1, size=(int(rng.integers(0, 200)), d)), axis=0)
        counts = box_counts_from_anchors(anchors, grid)
        inside = (np.abs(anchors) <= hw).all(axis=1).sum()
        assert counts.sum() == inside
        cs = extract_clusters([tuple(a) for a in anchors], 1)  # R=1: every site is alone
        meas = marked_measure(cs, 1.0, 0.0, K=1e9)
        bc = box_statistics(meas, grid)
        assert np.array_equal(bc.counts, counts)
        # split along the first axis into two rectangles
        k = int(rng.integers(0, grid.shape[0] + 1))
        lo, hi = [0] * d, list(grid.shape)
        assert bc.rectangle(lo, [k] + hi[1:]) + bc.rectangle([k] + lo[1:], hi) == bc.total
        # restricting to one mark class never increases counts
        single = box_statistics(meas, grid, mark_class=[CanonicalConfig(((0,) * d,))])
        assert np.array_equal(single.counts, bc.counts)
        none = box_statistics(meas, grid, mark_class=[])
        assert none.total == 0


def test_covering_grid_reaches_K():
    g = MesoGrid.covering(R=4, d=2, K=3.0, scale=0.01)
    assert g.viewing_K() >= 3.0
    assert MesoGrid(4, 2, g.m - 1, 0.01).viewing_K() < 3.0
