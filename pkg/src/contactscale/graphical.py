"""Harris graphical construction on a bounded space-time window.

Conventions used throughout the package:

* a vertical segment over ``(a, b]`` at site ``x`` is blocked by a recovery
  mark of ``x`` in ``(a, b]`` -- a mark at the departure instant does not
  block, a mark at the arrival instant does;
* a jump at time ``a`` uses an arrow with time exactly ``a``;
* events carry a global index (their rank in the ``(time, lane)`` order),
  which is the order in which forward sweeps process them.

Hand-built fixtures must not have two events touching a common site at the
same instant; such ties would make the above rules order-dependent.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .errors import FixtureError, OrderingError, ParameterError, UsageError, WindowOverflowError
from .lattice import Topology, as_site, topology_from_dict
from .params import SimParams

RECOVERY = 0
ARROW = 1


@dataclass(frozen=True)
class SpaceTimePoint:
    site: tuple
    time: float


class GraphicalEvents:
    """Immutable realization of recovery marks and infection arrows.

    Arrays are sorted by global index.  ``src`` is the site index of the event
    (the recovering site, or the arrow's tail); ``dst`` is the arrow's head or
    -1; ``lane`` is ``site * (n_dirs + 1) + j`` with ``j = 0`` for recoveries.
    """

    def __init__(self, topology: Topology, horizon: float, times, kind, src, dst, lane,
                 params: SimParams | None = None):
        self.topology = topology
        self.horizon = float(horizon)
        self.params = params
        self.times = np.asarray(times, dtype=np.float64)
        self.kind = np.asarray(kind, dtype=np.int8)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.lane = np.asarray(lane, dtype=np.int64)
        for a in (self.times, self.kind, self.src, self.dst, self.lane):
            a.setflags(write=False)
        if len(self.times) and (self.times[0] < 0 or self.times[-1] > self.horizon):
            raise ParameterError("event times must lie in [0, horizon]")
        self._build_site_index()

    # ------------------------------------------------------------------ basics
    def __len__(self):
        return len(self.times)

    @property
    def n_sites(self):
        return self.topology.n_sites

    def _build_site_index(self):
        n = self.topology.n_sites
        rec = [[] for _ in range(n)]
        out = [[] for _ in range(n)]
        times = self.times.tolist()
        kinds = self.kind.tolist()
        srcs = self.src.tolist()
        dsts = self.dst.tolist()
        for i, (t, k, s, d) in enumerate(zip(times, kinds, srcs, dsts)):
            if k == RECOVERY:
                rec[s].append(t)
            else:
                out[s].append((t, d, i))
        self._rec = rec
        self._out = out
        self._out_times = [[a[0] for a in lst] for lst in out]
        self._list_cache = (times, kinds, srcs, dsts)

    def recovery_times(self, site) -> list[float]:
        """Sorted recovery lane of ``site`` (a coordinate tuple or int index)."""
        return list(self._rec[self._idx(site)])

    def arrow_times(self, site, direction: int) -> list[float]:
        x = self._idx(site)
        m1 = self.topology.n_dirs + 1
        lane = x * m1 + 1 + direction
        return self.times[(self.lane == lane)].tolist()

    def arrows_from(self, site) -> list[tuple[float, int]]:
        """``(time, head_index)`` of outgoing arrows of ``site``, time-sorted."""
        return [(t, d) for t, d, _ in self._out[self._idx(site)]]

    def _idx(self, site) -> int:
        i = self.topology.index(as_site(site, self.topology.d))
        if i < 0:
            raise ParameterError(f"site {site} outside the window")
        return i

    def lane_counts(self) -> np.ndarray:
        m1 = self.topology.n_dirs + 1
        return np.bincount(self.lane, minlength=self.topology.n_sites * m1)

    # ------------------------------------------------------------ construction
    @classmethod
    def from_events(cls, topology: Topology, horizon: float,
                    recoveries: Iterable = (), arrows: Iterable = (), *, check_ties=True):
        """Build a realization from explicit marks.

        ``recoveries`` holds ``(site, time)``; ``arrows`` holds
        ``(from_site, to_site, time)`` or ``(from_site, to_site, time, direction)``.
        """
        recs = []
        m1 = topology.n_dirs + 1
        for site, t in recoveries:
            x = topology.index(as_site(site, topology.d))
            if x < 0:
                raise FixtureError(f"recovery site {site} outside window")
            recs.append((float(t), x * m1, RECOVERY, x, -1))
        for a in arrows:
            frm, to, t = a[0], a[1], a[2]
            fs, ts = as_site(frm, topology.d), as_site(to, topology.d)
            x = topology.index(fs)
            y = topology.index(ts)
            if x < 0 or y < 0:
                raise FixtureError(f"arrow {frm}->{to} leaves the window")
            dirs = [j for j in range(topology.n_dirs) if topology.neighbors[x, j] == y]
            if not dirs:
                raise FixtureError(f"arrow {frm}->{to} is not between nearest neighbours")
            j = a[3] if len(a) > 3 else dirs[0]
            if j not in dirs:
                raise FixtureError(f"direction {j} does not lead from {frm} to {to}")
            recs.append((float(t), x * m1 + 1 + j, ARROW, x, y))
        recs.sort(key=lambda r: (r[0], r[1]))
        if any(not 0 <= r[0] <= horizon for r in recs):
            raise FixtureError("event time outside [0, horizon]")
        ev = cls(topology, horizon,
                 [r[0] for r in recs], [r[2] for r in recs], [r[3] for r in recs],
                 [r[4] for r in recs], [r[1] for r in recs])
        if check_ties:
            ev.check_ties()
        return ev

    def check_ties(self):
        """Raise if two events touching a common site share a time."""
        seen = {}
        for t, k, s, d in zip(*self._list_cache):
            for site in ((s,) if k == RECOVERY else (s, d)):
                key = (t, site)
                if key in seen:
                    raise FixtureError(
                        f"events at identical time {t} both touch site {self.topology.coords(site)}"
                    )
                seen[key] = True

    def with_events(self, recoveries=(), arrows=()):
        """Copy with extra marks injected (used by monotonicity checks)."""
        recs, arrs = self.as_lists()
        return GraphicalEvents.from_events(self.topology, self.horizon,
                                           list(recs) + list(recoveries),
                                           list(arrs) + list(arrows), check_ties=False)

    def as_lists(self):
        recs, arrs = [], []
        coords = self.topology.coords
        m1 = self.topology.n_dirs + 1
        for t, k, s, d, l in zip(self.times.tolist(), self.kind.tolist(), self.src.tolist(),
                                 self.dst.tolist(), self.lane.tolist()):
            if k == RECOVERY:
                recs.append((coords(s), t))
            else:
                arrs.append((coords(s), coords(d), t, l % m1 - 1))
        return recs, arrs

    def restrict(self, t_max: float) -> "GraphicalEvents":
        keep = self.times <= t_max
        return GraphicalEvents(self.topology, t_max, self.times[keep], self.kind[keep],
                               self.src[keep], self.dst[keep], self.lane[keep], self.params)

    # ------------------------------------------------------------ (de)serialize
    def to_jsonl(self, path_or_file):
        lines = [json.dumps({"kind": "header", "topology": self.topology.describe(),
                             "horizon": self.horizon, "n_events": len(self)})]
        coords = self.topology.coords
        m1 = self.topology.n_dirs + 1
        for i, (t, k, s, d, l) in enumerate(zip(self.times.tolist(), self.kind.tolist(),
                                               self.src.tolist(), self.dst.tolist(),
                                               self.lane.tolist())):
            if k == RECOVERY:
                rec = {"kind": "recovery", "site": list(coords(s)), "time": t, "index": i}
            else:
                rec = {"kind": "arrow", "from": list(coords(s)), "to": list(coords(d)),
                       "dir": l % m1 - 1, "time": t, "index": i}
            lines.append(json.dumps(rec))
        text = "\n".join(lines) + "\n"
        if hasattr(path_or_file, "write"):
            path_or_file.write(text)
        else:
            with open(path_or_file, "w") as fh:
                fh.write(text)

    @classmethod
    def from_jsonl(cls, path_or_file, *, check_ties=True) -> "GraphicalEvents":
        if hasattr(path_or_file, "read"):
            text = path_or_file.read()
        else:
            with open(path_or_file) as fh:
                text = fh.read()
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or rows[0].get("kind") != "header":
            raise FixtureError("missing header line")
        topo = topology_from_dict(rows[0]["topology"])
        horizon = float(rows[0]["horizon"])
        m1 = topo.n_dirs + 1
        recs = []
        for row in rows[1:]:
            t = float(row["time"])
            if row["kind"] == "recovery":
                x = topo.index(tuple(row["site"]))
                recs.append((row.get("index", 0), t, RECOVERY, x, -1, x * m1))
            elif row["kind"] == "arrow":
                x = topo.index(tuple(row["from"]))
                y = topo.index(tuple(row["to"]))
                j = row.get("dir")
                if j is None:
                    j = next(j for j in range(topo.n_dirs) if topo.neighbors[x, j] == y)
                if x < 0 or topo.neighbors[x, j] != y:
                    raise FixtureError(f"bad arrow record {row}")
                recs.append((row.get("index", 0), t, ARROW, x, y, x * m1 + 1 + j))
            else:
                raise FixtureError(f"unknown event kind {row['kind']!r}")
        recs.sort(key=lambda r: (r[1], r[0], r[5]))
        ev = cls(topo, horizon, [r[1] for r in recs], [r[2] for r in recs],
                 [r[3] for r in recs], [r[4] for r in recs], [r[5] for r in recs])
        if check_ties:
            ev.check_ties()
        return ev


def generate_events(params: SimParams, backend: str | None = None) -> GraphicalEvents:
    """Sample all marks of the window for replica ``params.replica_index``.

    Each lane is a counter-based stream keyed by ``(seed, replica, lane)`` so
    the result is a pure function of those inputs.
    """
    topo = params.topology()
    m1 = topo.n_dirs + 1
    keys = topo.lane_keys.reshape(-1)
    rates = np.zeros(topo.n_sites * m1)
    rates[0::m1] = 1.0
    for j in range(topo.n_dirs):
        rates[1 + j::m1] = np.where(topo.neighbors[:, j] >= 0, params.lam, 0.0)
    if params.horizon <= 0:
        times = np.empty(0)
        lanes = np.empty(0, dtype=np.int64)
    else:
        times, lanes = kernels.get(backend).generate_lanes(
            params.seed, params.replica_index, keys, rates, params.horizon)
    order = np.lexsort((lanes, times))
    times = times[order]
    lanes = lanes[order]
    src = lanes // m1
    j = lanes % m1
    kind = np.where(j == 0, RECOVERY, ARROW).astype(np.int8)
    dst = np.full(len(lanes), -1, dtype=np.int64)
    arr = j > 0
    dst[arr] = topo.neighbors[src[arr], j[arr] - 1]
    return GraphicalEvents(topo, params.horizon, times, kind, src, dst, lanes, params)


# ---------------------------------------------------------------- path oracle
def open_path_exists(events: GraphicalEvents, frm: SpaceTimePoint, to: SpaceTimePoint) -> bool:
    """Direct search for an open path from ``frm`` to ``to``.

    Explores (site, recovery-interval) states; within one interval between
    consecutive recovery marks the earliest arrival dominates.
    """
    if frm.time > to.time:
        raise OrderingError("path would run backwards in time")
    topo = events.topology
    y = topo.index(as_site(frm.site, topo.d))
    x = topo.index(as_site(to.site, topo.d))
    if x < 0 or y < 0:
        raise ParameterError("endpoint outside the window")
    t_end = to.time
    best = {}
    stack = [(y, frm.time)]
    while stack:
        z, a = stack.pop()
        rec = events._rec[z]
        k = bisect.bisect_right(rec, a)
        if best.get((z, k), np.inf) <= a:
            continue
        best[(z, k)] = a
        next_rec = rec[k] if k < len(rec) else np.inf
        if z == x and t_end < next_rec:
            return True
        out_t = events._out_times[z]
        lo = bisect.bisect_left(out_t, a)
        for t, w, _ in events._out[z][lo:]:
            if t >= next_rec or t > t_end:
                break
            stack.append((w, t))
    return False


# ---------------------------------------------------------- backward reachability
class ReachabilityIndex:
    """Answers ``(x, s) ~> target_sites x {target_time}`` for ``s <= target_time``.

    Per site it stores the times at which membership changes during a single
    backward sweep, together with the value at the change instant and the value
    on the open interval just below it.
    """

    def __init__(self, events: GraphicalEvents, target_sites: frozenset, target_time: float,
                 toggles: list):
        self.events = events
        self.target_sites = target_sites
        self.target_time = target_time
        self._toggle_times = [[tt for tt, _, _ in lst] for lst in toggles]
        self._toggles = toggles

    def _check(self, s):
        if s > self.target_time:
            raise OrderingError("query time after the target time")

    def reaches(self, site, s: float) -> bool:
        self._check(s)
        return self.reaches_idx(self._site_index(site), s)

    def reaches_after(self, site, s: float) -> bool:
        """Value on ``(s, s + eps)``, i.e. whether ``(x, s+) ~> target``."""
        self._check(s)
        return self.reaches_after_idx(self._site_index(site), s)

    def reaches_idx(self, x: int, s: float) -> bool:
        times = self._toggle_times[x]
        k = bisect.bisect_left(times, s)
        if k == len(times):
            return x in self.target_sites
        t, at_value, below = self._toggles[x][k]
        return at_value if t == s else below

    def reaches_after_idx(self, x: int, s: float) -> bool:
        times = self._toggle_times[x]
        k = bisect.bisect_right(times, s)
        if k == len(times):
            return x in self.target_sites and s < self.target_time
        return self._toggles[x][k][2]

    def _site_index(self, site) -> int:
        topo = self.events.topology
        i = topo.index(as_site(site, topo.d))
        if i < 0:
            raise ParameterError(f"site {site} outside the window")
        return i

    def matches(self, target_sites, target_time) -> bool:
        return (_target_indices(self.events.topology, target_sites) == self.target_sites
                and target_time == self.target_time)


def backward_reachable_set(events: GraphicalEvents, target_sites, target_time: float) -> ReachabilityIndex:
    """One backward sweep from ``target_time`` to 0 (sites as tuples or indices)."""
    if target_time > events.horizon:
        raise ParameterError("target_time beyond the horizon")
    topo = events.topology
    tgt = _target_indices(topo, target_sites)
    if any(i < 0 for i in tgt):
        raise ParameterError("target site outside the window")
    n = topo.n_sites
    member = bytearray(n)
    for i in tgt:
        member[i] = 1
    toggles = [[] for _ in range(n)]
    times, kinds, srcs, dsts = events._list_cache
    hi = bisect.bisect_right(times, target_time)
    for i in range(hi - 1, -1, -1):
        t = times[i]
        x = srcs[i]
        if kinds[i] == RECOVERY:
            if member[x]:
                toggles[x].append((t, True, False))
                member[x] = 0
        else:
            if member[dsts[i]] and not member[x]:
                toggles[x].append((t, True, True))
                member[x] = 1
    for lst in toggles:
        lst.reverse()
    return ReachabilityIndex(events, tgt, target_time, toggles)


def _target_indices(topo: Topology, sites) -> frozenset:
    return frozenset(topo.index(as_site(s, topo.d)) for s in sites)


# ------------------------------------------------------------- lambda-paths
def max_lambda_path_jumps(events: GraphicalEvents, frm: SpaceTimePoint, duration: float) -> int:
    """Largest number of jumps of a lambda-path from ``frm`` within ``duration``."""
    if frm.time + duration > events.horizon + 1e-12:
        raise ParameterError("time window exceeds the horizon")
    topo = events.topology
    z = topo.index(as_site(frm.site, topo.d))
    if z < 0:
        raise ParameterError("start site outside the window")
    J = {z: 0}
    times, kinds, srcs, dsts = events._list_cache
    lo = bisect.bisect_left(times, frm.time)
    hi = bisect.bisect_right(times, frm.time + duration)
    for i in range(lo, hi):
        if kinds[i] != ARROW:
            continue
        x = srcs[i]
        if x in J:
            v = J[x] + 1
            y = dsts[i]
            if v > J.get(y, -1):
                J[y] = v
    if not topo.periodic:
        bnd = topo.boundary
        if any(bnd[i] for i in J):
            raise WindowOverflowError(
                f"a lambda-path from {frm.site} reached the window boundary; enlarge W")
    return max(J.values())


def coupled_evolve(events: GraphicalEvents, A, B, s: float, t: float):
    """Evolve ``A`` and ``B`` (``A`` inside ``B``) on the same realization."""
    from .process import evolve

    topo = events.topology
    a_idx = set(topo.indices(A).tolist())
    b_idx = set(topo.indices(B).tolist())
    if not a_idx <= b_idx:
        raise UsageError("coupled_evolve needs A to be a subset of B")
    return evolve(events, A, s, t), evolve(events, B, s, t)
