"""Minimal path, break point, good points and favorable intervals.

The minimal path is the canonical open path from an initial set at time 0 to
a target ``target_sites x {target_time}``: it starts at the highest-priority
initial site that reaches the target and, at each outgoing arrow of the
current site, either jumps or stays according to the four priority rules

  a  head has higher priority and reaches the target      -> jump
  b  head has higher priority but does not reach it        -> stay
  c  current site has higher priority and still reaches it -> stay
  d  current site has higher priority but is cut off       -> jump
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError, UsageError
from .graphical import (GraphicalEvents, ReachabilityIndex, SpaceTimePoint,
                        backward_reachable_set, max_lambda_path_jumps)
from .lattice import Ring, Topology, as_site, ball, priority_key, sphere
from .process import Trajectory

CASES = ("a", "b", "c", "d", "terminal")


class PriorityOrder:
    """Strict total order on sites given by a sort key (smaller key = higher priority)."""

    def __init__(self, key: Callable | None = None, name: str = "supnorm-lex"):
        self._key = key or priority_key
        self.name = name

    def key(self, site):
        return self._key(tuple(site))

    def precedes(self, x, y) -> bool:
        return self.key(x) < self.key(y)

    def minimum(self, sites):
        return min(sites, key=self.key)

    @classmethod
    def lexicographic(cls):
        return cls(lambda s: s, name="lex")

    @classmethod
    def from_ranking(cls, ranking: dict, d: int = 1):
        """Order given by explicit ranks ``{site: rank}`` (rank 1 is highest)."""
        ranks = {as_site(k, d): v for k, v in ranking.items()}
        return cls(lambda s: ranks[s], name="ranking")


@dataclass
class WorkPath:
    """The points ``(x_k, t_k)`` of a minimal path and the rule applied at each step."""

    start: tuple
    points: list  # [(site, time)]
    cases: list  # cases[k] is the rule that produced points[k]; cases[0] == "start"
    target_sites: frozenset
    target_time: float

    @property
    def end_time(self) -> float:
        return self.points[-1][1]

    def site_at(self, s: float) -> tuple:
        """``Gamma(s) = x_k`` for ``s`` in ``[t_k, t_{k+1})``."""
        times = [p[1] for p in self.points]
        k = bisect.bisect_right(times, s) - 1
        if k < 0 or s > self.end_time:
            raise ParameterError("time outside the path's lifetime")
        return self.points[k][0]

    def jump_times(self) -> list[float]:
        return [self.points[k][1] for k in range(1, len(self.points))
                if self.points[k][0] != self.points[k - 1][0]]

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times())

    def sites(self) -> list:
        out = [self.points[0][0]]
        for x, _ in self.points[1:]:
            if x != out[-1]:
                out.append(x)
        return out

    def is_open(self, events: GraphicalEvents) -> bool:
        """Replay every vertical segment and jump against the marks."""
        topo = events.topology
        for (x, a), (y, b) in zip(self.points, self.points[1:]):
            xi = topo.index(x)
            rec = events._rec[xi]
            k = bisect.bisect_right(rec, a)
            if k < len(rec) and rec[k] <= b:
                return False
            if y != x:
                yi = topo.index(y)
                if not any(t == b and d == yi for t, d, _ in events._out[xi]):
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "start": list(self.start),
            "steps": [[list(x), t, c] for (x, t), c in zip(self.points, self.cases)],
            "target_sites": sorted(list(s) for s in self.target_sites),
            "target_time": self.target_time,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, doc) -> "WorkPath":
        if isinstance(doc, str):
            doc = json.loads(doc)
        pts = [(tuple(x), float(t)) for x, t, _ in doc["steps"]]
        return cls(tuple(doc["start"]), pts, [c for _, _, c in doc["steps"]],
                   frozenset(tuple(s) for s in doc["target_sites"]), float(doc["target_time"]))


def minimal_path(events: GraphicalEvents, A, target_sites, target_time: float,
                 order: PriorityOrder | None = None,
                 index: ReachabilityIndex | None = None) -> WorkPath | None:
    """The minimal path from ``A x {0}`` to ``target_sites x {target_time}``, or None."""
    order = order or PriorityOrder()
    topo = events.topology
    target = [as_site(s, topo.d) for s in target_sites]
    if index is None:
        index = backward_reachable_set(events, target, target_time)
    elif not index.matches(target, target_time):
        raise UsageError("reachability index was built for a different target")
    a_idx = topo.indices(A).tolist()
    if not a_idx:
        raise ParameterError("minimal path needs a non-empty initial set")
    coords = topo.coords
    alive = [i for i in a_idx if index.reaches_idx(i, 0.0)]
    if not alive:
        return None
    keys = {}

    def key(i):
        if i not in keys:
            keys[i] = order.key(coords(i))
        return keys[i]

    x = min(alive, key=key)
    tgt = index.target_sites
    T = float(target_time)
    pts = [(x, 0.0)]
    cases = ["start"]
    t_cur = 0.0
    while True:
        out_t = events._out_times[x]
        k = bisect.bisect_right(out_t, t_cur)
        tau = out_t[k] if k < len(out_t) else math.inf
        if x in tgt and t_cur <= T <= tau:
            pts.append((x, T))
            cases.append("terminal")
            break
        if tau > T:
            raise AssertionError("minimal path lost its connection to the target")
        y = events._out[x][k][1]
        jump_ok = index.reaches_idx(y, tau)
        stay_ok = index.reaches_after_idx(x, tau)
        if key(y) < key(x):
            nxt, case = (y, "a") if jump_ok else (x, "b")
        else:
            nxt, case = (x, "c") if stay_ok else (y, "d")
        if not (jump_ok if nxt == y else stay_ok):
            raise AssertionError(f"rule {case} chose a branch that does not reach the target")
        pts.append((nxt, tau))
        cases.append(case)
        x, t_cur = nxt, tau
    return WorkPath(coords(pts[0][0]), [(coords(i), t) for i, t in pts], cases,
                    frozenset(coords(i) for i in tgt), T)


# ------------------------------------------------------------------ break point
@dataclass(frozen=True)
class BreakPoint:
    site: tuple
    time: float
    found: bool


def _ball_indices(topo: Topology, y: tuple, r: int) -> np.ndarray:
    if isinstance(topo, Ring):
        if 2 * r + 1 >= topo.n:
            return np.arange(topo.n)
        return np.array(sorted({(y[0] + k) % topo.n for k in range(-r, r + 1)}))
    idx = [topo.index(z) for z in ball(y, r)]
    return np.array([i for i in idx if i >= 0], dtype=np.int64)


def is_break_point(occupancy: np.ndarray, topo: Topology, y, r: int) -> bool:
    """``occupancy`` restricted to the ``r``-ball around ``y`` is exactly ``{y}``."""
    y = as_site(y, topo.d)
    yi = topo.index(y)
    return bool(occupancy[yi]) and int(occupancy[_ball_indices(topo, y, r)].sum()) == 1


def break_point(events: GraphicalEvents, path: WorkPath, trajectory: Trajectory,
                beta: float, t: float) -> BreakPoint:
    """First point ``(Gamma(s), s)``, ``s <= t``, isolated in its ``2*floor(beta*t)``-ball.

    Occupancy and the path are both piecewise constant and right-continuous,
    so only time zero and the change instants need to be visited.
    """
    if trajectory.events is not None and trajectory.events is not events:
        raise UsageError("trajectory was recorded on a different realization")
    if trajectory.topology != events.topology or trajectory.start != 0:
        raise UsageError("trajectory must start at time 0 on the same window")
    t_end = min(t, path.end_time)
    if trajectory.end < t_end:
        raise UsageError("trajectory does not cover the path")
    topo = events.topology
    r = 2 * math.floor(beta * t)
    occ = trajectory.initial.astype(np.int64)
    path_idx = [topo.index(x) for x, _ in path.points]
    path_t = [p[1] for p in path.points]
    ch_t, ch_x, ch_v = trajectory.times, trajectory.sites, trajectory.values

    candidates = sorted({0.0, *[s for s in path_t if s <= t_end],
                         *[s for s in ch_t if s <= t_end]})
    in_ball = np.zeros(topo.n_sites, dtype=bool)
    y = -1
    count = 0
    ci = 0
    for s in candidates:
        while ci < len(ch_t) and ch_t[ci] <= s:
            z, v = ch_x[ci], ch_v[ci]
            if occ[z] != v:
                occ[z] = v
                if in_ball[z]:
                    count += 1 if v else -1
            ci += 1
        k = bisect.bisect_right(path_t, s) - 1
        yk = path_idx[k]
        if yk != y:
            y = yk
            in_ball[:] = False
            b = _ball_indices(topo, topo.coords(y), r)
            in_ball[b] = True
            count = int(occ[b].sum())
        if occ[y] and count == 1:
            return BreakPoint(topo.coords(y), s, True)
    return BreakPoint(path.site_at(t_end), t_end, False)


# ------------------------------------------------------------------ good points
@dataclass(frozen=True)
class GoodPointReport:
    point: SpaceTimePoint
    beta: float
    t: float
    max_jumps: int
    is_good: bool
    sphere_good: bool | None = None  # every point of the 2*beta*t sphere is good
    both_good: bool | None = None

    def to_json(self) -> dict:
        return {"site": list(self.point.site), "time": self.point.time, "beta": self.beta,
                "t": self.t, "max_jumps": self.max_jumps, "is_good": self.is_good,
                "sphere_good": self.sphere_good, "both_good": self.both_good}


def classify_good(events: GraphicalEvents, z, s: float, beta: float, t: float,
                  composite: bool = False) -> GoodPointReport:
    """Good iff every lambda-path from ``(z, s)`` makes fewer than ``floor(beta*t)`` jumps in time ``t``."""
    z = as_site(z, events.topology.d)
    bt = math.floor(beta * t)
    jumps = max_lambda_path_jumps(events, SpaceTimePoint(z, s), t)
    good = jumps < bt
    sphere_good = both = None
    if composite:
        sphere_good = all(
            max_lambda_path_jumps(events, SpaceTimePoint(w, s), t) < bt
            for w in sphere(z, 2 * bt)
        )
        both = good and sphere_good
    return GoodPointReport(SpaceTimePoint(z, s), beta, t, jumps, good, sphere_good, both)


# ---------------------------------------------------------- favorable intervals
_SLACK = 1e-9  # round-off allowance in the jump-rate inequality


def is_favorable(jumps: Sequence[float], s: float, beta: float, t: float) -> bool:
    """``[s - sqrt t, s)`` is favorable: for all u in it, jumps in ``[u, s)`` <= 4 beta (s - u).

    The binding u are the jump times themselves, so only those are checked.
    """
    w = math.sqrt(t)
    jumps = sorted(jumps)
    lo = bisect.bisect_left(jumps, s - w)
    hi = bisect.bisect_left(jumps, s)
    for i in range(lo, hi):
        u = jumps[i]
        if hi - i > 4 * beta * (s - u) + _SLACK:
            return False
    return True


def favorable_intervals(path, beta: float, t: float) -> list[tuple[float, float]]:
    """Greedy left-to-right family of disjoint favorable intervals inside ``[0, t/2]``.

    ``path`` is a WorkPath or a sequence of jump times.  Taking the earliest
    feasible right end each time is optimal for equal-length intervals.  The
    feasible right ends form a finite union of intervals whose left ends are
    among: the lower bound itself, ``u + k/(4 beta)`` for a jump u, or just
    past ``u + sqrt t`` where a jump leaves the window.
    """
    jumps = sorted(path.jump_times() if isinstance(path, WorkPath) else path)
    w = math.sqrt(t)
    upper = t / 2
    cands = set()
    n = len(jumps)
    for u in jumps:
        for k in range(1, n + 1):
            cands.add(u + k / (4 * beta))
        cands.add(float(np.nextafter(u + w, math.inf)))
    cands = sorted(c for c in cands if c <= upper)
    out = []
    lower = w
    prev = 0.0  # right end of the previous interval (exact, to keep them disjoint)
    while lower <= upper:
        s = None
        if is_favorable(jumps, lower, beta, t):
            s = lower
        else:
            for c in cands[bisect.bisect_left(cands, lower):]:
                if is_favorable(jumps, c, beta, t):
                    s = c
                    break
        if s is None:
            break
        out.append((prev if s == lower else max(s - w, prev), s))
        prev = s
        lower = s + w
    return out
