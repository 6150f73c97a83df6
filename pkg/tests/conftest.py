import bisect
import math

import numpy as np
import pytest

from contactscale.graphical import GraphicalEvents, SpaceTimePoint, open_path_exists
from contactscale.lattice import Box, Ring
from contactscale.process import evolve_full
from contactscale.workpath import PriorityOrder, break_point, is_break_point, minimal_path

ACCEPTANCE_LINES = []  # filled by the acceptance suite, echoed in the terminal summary


def random_instance(rng, topo=None, n_events=None, horizon=5.0, lam_share=0.6):
    """Small hand-style realization with pairwise distinct event times."""
    topo = topo or Box(1, int(rng.integers(1, 4)))
    n_events = int(rng.integers(0, 13)) if n_events is None else n_events
    times = np.sort(rng.choice(np.arange(1, 1000), size=n_events, replace=False)) / 1000 * horizon
    recs, arrs = [], []
    for t in times:
        x = int(rng.integers(topo.n_sites))
        if rng.random() < lam_share:
            nb = [j for j in range(topo.n_dirs) if topo.neighbors[x, j] >= 0]
            if nb:
                j = int(rng.choice(nb))
                arrs.append((topo.coords(x), topo.coords(int(topo.neighbors[x, j])), float(t), j))
                continue
        recs.append((topo.coords(x), float(t)))
    return GraphicalEvents.from_events(topo, horizon, recs, arrs)


def all_open_paths(ev, A, target, T):
    """Every open path from A x {0} to target x {T}, as (start, ((site, time), ...)) jump lists."""
    topo = ev.topology
    target = set(target)
    out = []

    def walk(x, a, start, jumps):
        rec = ev._rec[x]
        k = bisect.bisect_right(rec, a)
        nxt = rec[k] if k < len(rec) else math.inf
        if topo.coords(x) in target and T < nxt:
            out.append((start, tuple(jumps)))
        for t, y, _ in ev._out[x]:
            if t <= a:
                continue
            if t >= nxt or t > T:
                break
            walk(y, t, start, jumps + [(topo.coords(y), t)])

    for s in A:
        walk(topo.index(s), 0.0, tuple(s), [])
    return out


def reach_oracle(ev, x, s, target, T):
    return any(open_path_exists(ev, SpaceTimePoint(x, s), SpaceTimePoint(z, T)) for z in target)


def _min_gap(ev):
    t = np.sort(ev.times)
    gaps = np.diff(np.concatenate([[0.0], t, [ev.horizon]]))
    gaps = gaps[gaps > 0]
    return float(gaps.min()) if len(gaps) else ev.horizon


def random_query(rng, ev):
    sites = ev.topology.all_sites()
    A = [x for x in sites if rng.random() < 0.5] or [sites[0]]
    target = [x for x in sites if rng.random() < 0.5] or [sites[-1]]
    T = float(rng.choice([ev.horizon, rng.uniform(0.5, ev.horizon)]))
    return A, target, T


def check_minimal_path(ev, A, target, T, order=None):
    """Exhaustive replay of every rule; returns the path (or None)."""
    topo = ev.topology
    order = order or PriorityOrder()
    path = minimal_path(ev, A, target, T, order=order)
    reachers = [x for x in A if reach_oracle(ev, x, 0.0, target, T)]
    if not reachers:
        assert path is None
        return None
    assert path.is_open(ev)
    assert path.start == order.minimum(reachers)
    eps = _min_gap(ev) / 2
    for k in range(1, len(path.points)):
        (x, _), (z, tau) = path.points[k - 1], path.points[k]
        case = path.cases[k]
        if case == "terminal":
            assert z == x and tau == T and x in set(target)
            continue
        heads = [topo.coords(w) for t, w, _ in ev._out[topo.index(x)] if t == tau]
        assert len(heads) == 1
        y = heads[0]
        jump_ok = reach_oracle(ev, y, tau, target, T)
        stay_ok = tau < T and reach_oracle(ev, x, tau + min(eps, (T - tau) / 2), target, T)
        if order.precedes(y, x):
            assert case == ("a" if jump_ok else "b")
        else:
            assert case == ("c" if stay_ok else "d")
        assert z == (y if case in "ad" else x)
        assert (jump_ok if z == y else stay_ok)
    return path


def _brute_break(ev, occ_reach, y, s, r):
    """(y,s) reachable from L_0 and nothing else within distance r is."""
    topo = ev.topology
    if not occ_reach(y, s):
        return False
    for x in topo.all_sites():
        if x != y and max(abs(a - b) for a, b in zip(x, y)) <= r and occ_reach(x, s):
            return False
    return True


def check_break_point(rng):
    """Break point of a random instance against a reachability scan.

    Returns None when the instance has no surviving path, else the found flag.
    """
    topo = Box(1, int(rng.integers(2, 5)))
    ev = random_instance(rng, topo=topo, n_events=int(rng.integers(0, 13)), lam_share=0.5)
    sites = topo.all_sites()
    T = ev.horizon

    def reach(x, s):
        return any(open_path_exists(ev, SpaceTimePoint(z, 0.0), SpaceTimePoint(x, s))
                   for z in sites)

    target = [x for x in sites if reach(x, T)]
    if not target:
        return None
    path = minimal_path(ev, [(0,)] if reach((0,), 0.0) else sites, target, T)
    if path is None:
        return None
    _, traj = evolve_full(ev, 0.0, T)
    beta = float(rng.choice([0.1, 0.25, 0.5]))
    r = 2 * math.floor(beta * T)
    bp = break_point(ev, path, traj, beta, T)
    cands = sorted({0.0, *[float(x) for x in ev.times], *[p[1] for p in path.points]})
    want = None
    for s in cands:
        if _brute_break(ev, reach, path.site_at(s), s, r):
            want = (path.site_at(s), s)
            break
    if want is None:
        assert not bp.found and bp.time == T
        return False
    assert bp.found and (bp.site, bp.time) == want
    assert is_break_point(traj.occupancy_at(bp.time), topo, bp.site, r)
    return True


def lambda_jumps_oracle(ev, z, s, duration):
    """Most jumps of any lambda-path from (z, s) by exhaustive search."""
    topo = ev.topology
    best = 0

    def walk(x, a, n, strict):
        nonlocal best
        best = max(best, n)
        for t, y, _ in ev._out[x]:
            if (t > a or (not strict and t == a)) and t <= s + duration:
                walk(y, t, n + 1, True)

    walk(topo.index(z), s, 0, False)
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ring6():
    return Ring(6)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
