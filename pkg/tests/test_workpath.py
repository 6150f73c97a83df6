import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import (all_open_paths, check_break_point, check_minimal_path,
                      lambda_jumps_oracle, random_instance, random_query)
from contactscale.errors import UsageError
from contactscale.graphical import (GraphicalEvents, SpaceTimePoint, backward_reachable_set,
                                    generate_events, max_lambda_path_jumps)
from contactscale.lattice import Box, Ring
from contactscale.estimators import simulate_replicas
from contactscale.params import SimParams
from contactscale.process import evolve, evolve_full
from contactscale.workpath import (PriorityOrder, WorkPath, break_point, classify_good,
                                   favorable_intervals, is_favorable,
                                   minimal_path)

FIX = Path(__file__).parent / "fixtures"


def _fixture():
    ev = GraphicalEvents.from_jsonl(FIX / "minimal_path_events.jsonl")
    exp = json.loads((FIX / "minimal_path_expected.json").read_text())
    order = PriorityOrder.from_ranking({int(k): v for k, v in exp["ranking"].items()})
    return ev, exp, order


def test_fixture_path_steps():
    ev, exp, order = _fixture()
    path = minimal_path(ev, [(x,) for x in exp["initial"]], [(x,) for x in exp["target_sites"]],
                        exp["target_time"], order=order)
    assert path is not None and path.is_open(ev)
    assert path.to_json()["steps"] == exp["steps"]
    # following an arrow to a lower-priority site because the current one is cut off
    assert path.cases[1] == "d"
    assert path.jump_times() == [1.0, 2.25, 4.0]
    assert WorkPath.from_json(path.dumps()).points == path.points


def test_no_events_path_is_vertical():
    ev = GraphicalEvents.from_events(Box(1, 3), 4.0, [], [])
    path = minimal_path(ev, [(0,)], [(0,)], 4.0)
    assert path.points == [((0,), 0.0), ((0,), 4.0)]
    assert path.n_jumps == 0 and path.site_at(2.0) == (0,)


def test_unreachable_target_gives_none():
    ev = GraphicalEvents.from_events(Box(1, 3), 4.0, [((0,), 1.0)], [])
    assert minimal_path(ev, [(0,)], [(0,)], 4.0) is None


def test_index_for_another_target_is_rejected():
    ev = GraphicalEvents.from_events(Box(1, 3), 4.0, [], [])
    idx = backward_reachable_set(ev, [(1,)], 4.0)
    with pytest.raises(UsageError):
        minimal_path(ev, [(0,)], [(0,)], 4.0, index=idx)


def test_minimal_path_random_instances(rng):
    order = PriorityOrder()
    n_unique = 0
    for _ in range(1000):
        ev = random_instance(rng)
        A, target, T = random_query(rng, ev)
        path = check_minimal_path(ev, A, target, T, order)
        paths = all_open_paths(ev, A, target, T)
        if len(paths) == 1:
            n_unique += 1
            start, jumps = paths[0]
            assert path.start == start
            got = [(x, t) for (x, t), c in zip(path.points, path.cases) if c in ("a", "d")]
            assert got == list(jumps)
    assert n_unique > 100


def test_minimal_path_under_other_orders(rng):
    orders = [PriorityOrder.lexicographic(), PriorityOrder(lambda s: tuple(-c for c in s), "rev")]
    for _ in range(300):
        ev = random_instance(rng)
        A, target, T = random_query(rng, ev)
        for order in orders:
            check_minimal_path(ev, A, target, T, order)


# ------------------------------------------------------------------ break point
def test_break_point_matches_brute_force(rng):
    found = [check_break_point(rng) for _ in range(300)]
    assert sum(f is True for f in found) > 20


def test_break_point_fallback_without_events():
    ev = GraphicalEvents.from_events(Box(1, 6), 3.0, [], [])
    path = minimal_path(ev, [(0,)], [(0,)], 3.0)
    _, traj = evolve_full(ev, 0.0, 3.0)
    bp = break_point(ev, path, traj, beta=1.0, t=3.0)
    assert not bp.found and bp.site == (0,) and bp.time == 3.0


def test_break_point_when_the_neighbourhood_dies():
    topo = Box(1, 6)
    rng = np.random.default_rng(0)
    recs = [((x,), float(t)) for x, t in zip(range(-6, 7), rng.uniform(0.1, 1.0, 13)) if x != 0]
    ev = GraphicalEvents.from_events(topo, 3.0, recs, [])
    path = minimal_path(ev, [(0,)], [(0,)], 3.0)
    _, traj = evolve_full(ev, 0.0, 3.0)
    bp = break_point(ev, path, traj, beta=1.0, t=3.0)
    assert bp.found and bp.site == (0,) and bp.time <= 1.0
    # the neighbours within distance 2*floor(beta*t) = 6 are all gone at that instant
    assert bp.time == max(t for (x,), t in recs if abs(x) <= 6)


def test_break_point_rejects_foreign_trajectory():
    ev = GraphicalEvents.from_events(Box(1, 3), 3.0, [], [])
    other = GraphicalEvents.from_events(Box(1, 3), 3.0, [((1,), 1.0)], [])
    path = minimal_path(ev, [(0,)], [(0,)], 3.0)
    _, traj = evolve_full(other, 0.0, 3.0)
    with pytest.raises(UsageError):
        break_point(ev, path, traj, 1.0, 3.0)


# ------------------------------------------------------------------ good points
def test_lambda_jump_counts_match_enumeration(rng):
    for _ in range(1000):
        ev = random_instance(rng, topo=Ring(int(rng.integers(3, 6))), lam_share=0.8)
        z = (int(rng.integers(ev.topology.n_sites)),)
        s = float(rng.uniform(0, 2))
        dur = float(rng.uniform(0, ev.horizon - s))
        assert max_lambda_path_jumps(ev, SpaceTimePoint(z, s), dur) == \
            lambda_jumps_oracle(ev, z, s, dur)


def test_good_point_examples():
    topo = Box(1, 8)
    assert classify_good(GraphicalEvents.from_events(topo, 4.0, [], []), (0,), 0.0, 1.0, 1.0).is_good
    chain = [((0,), (1,), 1.0, 0), ((1,), (2,), 2.0, 0), ((2,), (3,), 3.0, 0)]
    ev = GraphicalEvents.from_events(topo, 4.0, [((1,), 1.5)], chain)
    rep = classify_good(ev, (0,), 0.0, beta=1.0, t=3.0)
    assert rep.max_jumps == 3 and not rep.is_good
    assert classify_good(ev, (0,), 0.0, beta=4 / 3.0 + 1e-9, t=3.0).is_good
    rep = classify_good(ev, (0,), 0.0, beta=1.0, t=3.0, composite=True)
    assert rep.both_good is False


# ---------------------------------------------------------- favorable intervals
def test_zero_jump_path_intervals():
    assert favorable_intervals([], 4.0, 16.0) == [(0.0, 4.0), (4.0, 8.0)]


def test_packed_jumps_leave_later_intervals_favorable():
    beta, t = 1.0, 16.0
    jumps = list(np.linspace(0.1, 3.9, int(beta * t)))
    for s in np.linspace(8.0, 8.0 + 10, 21):
        assert is_favorable(jumps, float(s), beta, t)
    assert not is_favorable(jumps, 4.0, beta, t)
    iv = favorable_intervals(jumps, beta, t)
    assert iv and iv[0][0] >= 0 and iv[-1][1] <= t / 2


def _check_intervals(jumps, beta, t, iv):
    w = math.sqrt(t)
    for (a, b), nxt in zip(iv, iv[1:] + [None]):
        assert 0 <= a and b <= t / 2 + 1e-12 and abs(b - a - w) < 1e-9 * t
        assert is_favorable(jumps, b, beta, t)
        if nxt is not None:
            assert nxt[0] >= b
    return len(iv) >= math.sqrt(t) / 4 - 1


def test_favorable_count_on_simulated_paths():
    beta, t = 4.0, 16.0
    p = SimParams(d=1, lam=1.0, horizon=t, W=64, margin=0, beta=beta, seed=808)
    # screen survivors with the batch kernel, then realize only those
    ext = simulate_replicas(p, [(0,)], 30000).ext_time
    survivors = np.flatnonzero(ext > t)
    n_paths = 0
    for r in survivors:
        if n_paths == 1000:
            break
        ev = generate_events(p.replace(replica_index=int(r)))
        target = evolve(ev, [(0,)], 0.0, t).sites
        path = minimal_path(ev, [(0,)], target, t)
        jumps = [u for u in path.jump_times() if u <= t]
        if len(jumps) > beta * t:
            continue
        n_paths += 1
        assert _check_intervals(jumps, beta, t, favorable_intervals(jumps, beta, t))
    assert n_paths == 1000


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([64.0, 144.0, 256.0]),
       st.sampled_from([0.25, 0.5, 1.0]), st.sampled_from(["uniform", "bursts", "early"]))
def test_favorable_count_adversarial(seed, t, beta, shape):
    rng = np.random.default_rng(seed)
    n = int(beta * t)
    if shape == "uniform":
        jumps = rng.uniform(0, t, n)
    elif shape == "bursts":
        centres = rng.uniform(0, t / 2, int(rng.integers(1, 6)))
        jumps = rng.choice(centres, n) + rng.exponential(0.05, n)
    else:
        jumps = rng.uniform(0, t / 2, n)
    jumps = sorted(float(u) for u in np.clip(jumps, 0, t))
    assert _check_intervals(jumps, beta, t, favorable_intervals(jumps, beta, t))
