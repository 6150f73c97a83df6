import json
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from conftest import random_instance, reach_oracle
from contactscale.errors import (FixtureError, OrderingError, ParameterError,
                                 WindowOverflowError)
from contactscale.graphical import (GraphicalEvents, SpaceTimePoint, backward_reachable_set,
                                    coupled_evolve, generate_events, max_lambda_path_jumps,
                                    open_path_exists)
from contactscale.lattice import Box, Ring
from contactscale.params import SimParams

P = SpaceTimePoint


def test_zero_horizon_gives_empty_lanes():
    ev = generate_events(SimParams(d=1, lam=1.0, horizon=0.0, W=3))
    assert len(ev) == 0


def test_same_seed_and_replica_are_bit_identical():
    p = SimParams(d=2, lam=0.3, horizon=4.0, W=15, seed=99, replica_index=7)
    a, b = generate_events(p), generate_events(p)
    assert a.times.tobytes() == b.times.tobytes()
    assert np.array_equal(a.lane, b.lane)
    c = generate_events(p.replace(replica_index=8))
    assert len(c) != len(a) or not np.array_equal(c.times, a.times)


def test_lanes_survive_window_enlargement():
    small = generate_events(SimParams(d=1, lam=1.0, horizon=3.0, W=10, seed=5))
    big = generate_events(SimParams(d=1, lam=1.0, horizon=3.0, W=20, seed=5))
    for x in (-3, 0, 4):
        assert small.recovery_times((x,)) == big.recovery_times((x,))
        assert small.arrow_times((x,), 0) == big.arrow_times((x,), 0)


def test_mean_recovery_count_per_site():
    # d=1, lambda=1, W=50, t=10: mean recovery count 10 within a 3 sigma band
    counts = []
    for r in range(40):
        ev = generate_events(SimParams(d=1, lam=1.0, horizon=10.0, W=50, seed=1, replica_index=r))
        counts.append(ev.lane_counts()[0::3])
    counts = np.concatenate(counts)
    se = math.sqrt(10.0 / counts.size)
    assert abs(counts.mean() - 10.0) < 3 * se


def test_lane_counts_are_poisson():
    # chi-square on per-lane counts over 10^4 replicas of a single site pair
    p = SimParams(d=1, lam=0.7, horizon=2.0, W=1, seed=3, margin=0, beta=0.5)
    rec, arr = [], []
    for r in range(10_000):
        c = generate_events(p.replace(replica_index=r)).lane_counts()
        rec.append(c[3])  # recovery lane of the centre site
        arr.append(c[4])  # its arrow lane towards +1
    for x, mu in ((np.array(rec), 2.0), (np.array(arr), 1.4)):
        kmax = 7
        obs = np.bincount(np.minimum(x, kmax), minlength=kmax + 1)
        pk = scipy.stats.poisson.pmf(np.arange(kmax), mu)
        exp = np.append(pk, 1 - pk.sum()) * len(x)
        assert scipy.stats.chisquare(obs, exp).pvalue > 0.01


def test_invalid_window_is_a_parameter_error():
    with pytest.raises(ParameterError):
        SimParams(d=1, lam=1.0, horizon=5.0, W=0)
    with pytest.raises(ParameterError):
        SimParams(d=1, lam=1.0, horizon=5.0, W=10)  # below ceil(t) + 2 ceil(t)
    with pytest.raises(ParameterError):
        SimParams(d=1, lam=1.0, horizon=-1.0, W=10)


def test_open_path_examples():
    box = Box(1, 2)
    empty = GraphicalEvents.from_events(box, 5.0)
    assert open_path_exists(empty, P((0,), 0.0), P((0,), 5.0))
    blocked = GraphicalEvents.from_events(box, 5.0, recoveries=[((0,), 2.0)])
    assert not open_path_exists(blocked, P((0,), 0.0), P((0,), 5.0))
    hop = GraphicalEvents.from_events(box, 5.0, recoveries=[((0,), 2.0)],
                                      arrows=[((0,), (1,), 1.0)])
    assert open_path_exists(hop, P((0,), 0.0), P((1,), 5.0))
    with pytest.raises(OrderingError):
        open_path_exists(hop, P((0,), 3.0), P((0,), 1.0))


def test_half_open_recovery_convention():
    box = Box(1, 1)
    ev = GraphicalEvents.from_events(box, 5.0, recoveries=[((0,), 2.0)])
    # a mark at the arrival instant blocks, one at the departure instant does not
    assert not open_path_exists(ev, P((0,), 1.0), P((0,), 2.0))
    assert open_path_exists(ev, P((0,), 2.0), P((0,), 3.0))


def test_reachability_examples():
    box = Box(1, 3)
    empty = GraphicalEvents.from_events(box, 5.0)
    idx = backward_reachable_set(empty, [(0,)], 5.0)
    assert idx.reaches((0,), 1.0) and not idx.reaches((1,), 1.0)
    ev = GraphicalEvents.from_events(box, 5.0, recoveries=[((0,), 3.0)])
    idx = backward_reachable_set(ev, [(0,)], 5.0)
    assert not idx.reaches((0,), 2.0) and not idx.reaches((0,), 2.999)
    # leaving at the mark instant itself: the segment (3, 5] is clear
    assert idx.reaches((0,), 3.0) and idx.reaches((0,), 3.5)


def test_reachability_agrees_with_path_search(rng):
    n = 0
    for _ in range(200):
        ev = random_instance(rng)
        topo = ev.topology
        target = [topo.coords(i) for i in range(topo.n_sites) if rng.random() < 0.4] or [(0,)]
        T = float(rng.uniform(1, 5))
        idx = backward_reachable_set(ev, target, T)
        for _ in range(5):
            x = topo.coords(int(rng.integers(topo.n_sites)))
            s = float(rng.choice(np.append(ev.times[ev.times <= T], rng.uniform(0, T))))
            assert idx.reaches(x, s) == reach_oracle(ev, x, s, target, T)
            n += 1
    assert n == 1000


def test_lambda_path_jump_examples():
    ring = Ring(6)
    none = GraphicalEvents.from_events(ring, 5.0, recoveries=[((0,), 1.0)])
    assert max_lambda_path_jumps(none, P((0,), 0.0), 5.0) == 0
    chain = GraphicalEvents.from_events(ring, 5.0, arrows=[((0,), (1,), 1.0), ((1,), (2,), 2.0),
                                                          ((2,), (3,), 3.0)])
    assert max_lambda_path_jumps(chain, P((0,), 0.0), 5.0) == 3
    back = GraphicalEvents.from_events(ring, 5.0, arrows=[((0,), (1,), 1.0), ((1,), (0,), 2.0)])
    assert max_lambda_path_jumps(back, P((0,), 0.0), 5.0) == 2
    # recovery marks are ignored by lambda-paths
    rec = GraphicalEvents.from_events(ring, 5.0, recoveries=[((1,), 1.5)],
                                      arrows=[((0,), (1,), 1.0), ((1,), (2,), 2.0)])
    assert max_lambda_path_jumps(rec, P((0,), 0.0), 5.0) == 2


def test_lambda_path_window_overflow():
    box = Box(1, 2)
    ev = GraphicalEvents.from_events(box, 5.0, arrows=[((0,), (1,), 1.0), ((1,), (2,), 2.0)])
    with pytest.raises(WindowOverflowError):
        max_lambda_path_jumps(ev, P((0,), 0.0), 5.0)
    assert max_lambda_path_jumps(ev, P((0,), 0.0), 1.5) == 1


def test_coupled_evolve_examples(rng):
    for _ in range(200):
        ev = random_instance(rng)
        sites = ev.topology.all_sites()
        B = [x for x in sites if rng.random() < 0.6]
        A = [x for x in B if rng.random() < 0.5]
        a, b = coupled_evolve(ev, A, B, 0.0, ev.horizon)
        assert set(a) <= set(b)
        if not A:
            assert len(a) == 0
        same, same2 = coupled_evolve(ev, B, B, 0.0, ev.horizon)
        assert same == same2


def test_jsonl_round_trip(tmp_path):
    ev = generate_events(SimParams(d=2, lam=0.3, horizon=2.0, W=7, seed=4))
    path = tmp_path / "ev.jsonl"
    ev.to_jsonl(path)
    back = GraphicalEvents.from_jsonl(path)
    assert np.array_equal(back.times, ev.times)
    assert np.array_equal(back.lane, ev.lane)
    first = json.loads(path.read_text().splitlines()[1])
    assert set(first) >= {"kind", "time", "index"}


def test_fixture_ties_rejected():
    with pytest.raises(FixtureError):
        GraphicalEvents.from_events(Box(1, 2), 5.0, recoveries=[((0,), 1.0)],
                                    arrows=[((0,), (1,), 1.0)])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), extra=st.integers(1, 4))
def test_injecting_marks_is_monotone(seed, extra):
    rng = np.random.default_rng(seed)
    ev = random_instance(rng, topo=Box(1, 3))
    A = ev.topology.all_sites()
    from contactscale.process import evolve
    base = set(evolve(ev, A, 0.0, ev.horizon))
    used = set(ev.times.tolist())
    free = [t for t in np.round(rng.uniform(0, 5, 20), 6) if t not in used and 0 < t < 5]
    if len(free) < extra:
        return
    x = [ev.topology.coords(int(i)) for i in rng.integers(ev.topology.n_sites, size=extra)]
    more_rec = ev.with_events(recoveries=[(x[i], free[i]) for i in range(extra)])
    assert set(evolve(more_rec, A, 0.0, ev.horizon)) <= base
    arrows = []
    for i in range(extra):
        xi = ev.topology.index(x[i])
        j = int(rng.integers(2))
        y = int(ev.topology.neighbors[xi, j])
        if y >= 0:
            arrows.append((x[i], ev.topology.coords(y), free[i], j))
    more_arr = ev.with_events(arrows=arrows)
    assert set(evolve(more_arr, A, 0.0, ev.horizon)) >= base
