"""Forward evolution on a fixed realization and the quotient modulo translations."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import OrderingError, ParameterError
from .graphical import RECOVERY, GraphicalEvents
from .lattice import Ring, Topology, as_site

NEVER = math.inf  # absorption not observed before the horizon


@dataclass(frozen=True)
class Configuration:
    """A finite set of infected sites, lexicographically sorted."""

    sites: tuple
    topology: Topology = field(compare=False, repr=False, default=None)
    boundary_contamination: bool = field(compare=False, default=False)

    @classmethod
    def of(cls, topology: Topology, sites: Iterable, boundary_contamination=False):
        s = tuple(sorted({as_site(x, topology.d) for x in sites}))
        for x in s:
            if not topology.contains(x):
                raise ParameterError(f"site {x} outside the window")
        return cls(s, topology, boundary_contamination)

    @classmethod
    def from_indices(cls, topology: Topology, idx, boundary_contamination=False):
        return cls(tuple(topology.coords(int(i)) for i in sorted(idx)), topology,
                   boundary_contamination)

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, x):
        return x in self.sites

    def __bool__(self):
        return bool(self.sites)

    def translate(self, v) -> "Configuration":
        return Configuration(tuple(sorted(tuple(a + b for a, b in zip(x, v)) for x in self.sites)),
                             self.topology)

    def to_json(self) -> list:
        return [list(x) for x in self.sites]


@dataclass(frozen=True, order=True)
class CanonicalConfig:
    """Representative of a translation class; ``sites == ()`` is the empty sentinel."""

    sites: tuple

    @property
    def is_empty(self) -> bool:
        return not self.sites

    def __len__(self):
        return len(self.sites)

    @property
    def size(self) -> int:
        return len(self.sites)

    @property
    def width(self) -> int:
        """Sup-norm diameter of the configuration."""
        if len(self.sites) < 2:
            return 0
        arr = np.array(self.sites)
        return int((arr.max(axis=0) - arr.min(axis=0)).max())

    def to_json(self) -> list:
        return [list(x) for x in self.sites]

    @classmethod
    def from_json(cls, rows) -> "CanonicalConfig":
        return cls(tuple(tuple(int(c) for c in r) for r in rows))

    def __str__(self):
        if self.is_empty:
            return "<empty>"
        return "{" + ",".join(
            str(x[0]) if len(x) == 1 else "(" + ",".join(map(str, x)) + ")" for x in self.sites
        ) + "}"


EMPTY = CanonicalConfig(())


def canonical_form(c: Configuration, topology: Topology | None = None) -> CanonicalConfig:
    """Translate ``c`` so that its lexicographic minimum is the origin.

    On a ring the representative is the least rotation instead.
    """
    topo = topology or c.topology
    if isinstance(topo, Ring):
        return CanonicalConfig(topo.canonical(c.sites))
    s = sorted(c.sites)
    if not s:
        return EMPTY
    base = s[0]
    return CanonicalConfig(tuple(tuple(a - b for a, b in zip(x, base)) for x in s))


def canonical_from_indices(topology: Topology, idx) -> CanonicalConfig:
    """Canonical form straight from sorted site indices."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        return EMPTY
    if isinstance(topology, Ring):
        return CanonicalConfig(topology.canonical([(int(i),) for i in idx]))
    # index order is lexicographic order, so idx[0] is the anchor
    coords = np.stack(np.unravel_index(idx, (topology.side,) * topology.d), axis=1)
    rel = coords - coords[0]
    return CanonicalConfig(tuple(map(tuple, rel.tolist())))


@dataclass
class Trajectory:
    """Change log of an evolution: initial occupancy plus (time, site, value)."""

    topology: Topology
    start: float
    end: float
    initial: np.ndarray
    times: list = field(default_factory=list)
    sites: list = field(default_factory=list)
    values: list = field(default_factory=list)
    events: object = field(default=None, repr=False, compare=False)

    def occupancy_at(self, s: float) -> np.ndarray:
        """Occupancy after all events with time <= s."""
        if s < self.start or s > self.end:
            raise OrderingError("time outside the recorded interval")
        occ = self.initial.copy()
        k = bisect.bisect_right(self.times, s)
        for x, v in zip(self.sites[:k], self.values[:k]):
            occ[x] = v
        return occ

    def configuration_at(self, s: float) -> Configuration:
        return Configuration.from_indices(self.topology, np.flatnonzero(self.occupancy_at(s)))


def _sweep(events: GraphicalEvents, occ: bytearray, s: float, t: float, traj: Trajectory | None):
    """Apply events with ``s <= time <= t`` (recoveries only if ``time > s``)."""
    times, kinds, srcs, dsts = events._list_cache
    bnd = events.topology.boundary
    hit = any(bnd[i] for i in range(len(occ)) if occ[i]) if not events.topology.periodic else False
    lo = bisect.bisect_left(times, s)
    hi = bisect.bisect_right(times, t)
    for i in range(lo, hi):
        x = srcs[i]
        if kinds[i] == RECOVERY:
            if occ[x] and times[i] > s:
                occ[x] = 0
                if traj is not None:
                    traj.times.append(times[i])
                    traj.sites.append(x)
                    traj.values.append(0)
        else:
            y = dsts[i]
            if occ[x] and not occ[y]:
                occ[y] = 1
                if bnd[y]:
                    hit = True
                if traj is not None:
                    traj.times.append(times[i])
                    traj.sites.append(y)
                    traj.values.append(1)
    return hit


def evolve(events: GraphicalEvents, A, s: float, t: float, record: bool = False):
    """The configuration at ``t`` started from ``A`` at ``s``.

    With ``record=True`` returns ``(configuration, trajectory)``.  The
    configuration's ``boundary_contamination`` is set whenever a boundary site
    is infected at some time in ``[s, t]``.
    """
    if s > t:
        raise OrderingError("evolve needs s <= t")
    if t > events.horizon:
        raise ParameterError("t beyond the horizon of the realization")
    topo = events.topology
    occ = bytearray(topo.n_sites)
    for i in _as_indices(topo, A):
        occ[i] = 1
    traj = None
    if record:
        traj = Trajectory(topo, s, t, np.frombuffer(bytes(occ), dtype=np.uint8).copy(),
                          events=events)
    hit = _sweep(events, occ, s, t, traj)
    conf = Configuration.from_indices(topo, [i for i in range(topo.n_sites) if occ[i]], hit)
    return (conf, traj) if record else conf


def evolve_full(events: GraphicalEvents, s: float, t: float, record: bool = True):
    """Evolution from the fully occupied window (the stand-in for Z^d)."""
    topo = events.topology
    return evolve(events, [topo.coords(i) for i in range(topo.n_sites)], s, t, record=record)


def absorption_time(events: GraphicalEvents, A, s: float = 0.0) -> float:
    """First time the evolution from ``A`` at ``s`` is empty, or ``NEVER``."""
    topo = events.topology
    occ = bytearray(topo.n_sites)
    n = 0
    for i in _as_indices(topo, A):
        occ[i] = 1
        n += 1
    if n == 0:
        return s
    times, kinds, srcs, dsts = events._list_cache
    for i in range(bisect.bisect_left(times, s), len(times)):
        x = srcs[i]
        if kinds[i] == RECOVERY:
            if occ[x] and times[i] > s:
                occ[x] = 0
                n -= 1
                if n == 0:
                    return times[i]
        else:
            y = dsts[i]
            if occ[x] and not occ[y]:
                occ[y] = 1
                n += 1
    return NEVER


def _as_indices(topo: Topology, A) -> list[int]:
    if isinstance(A, Configuration):
        A = A.sites
    out = []
    for a in A:
        i = topo.index(as_site(a, topo.d))
        if i < 0:
            raise ParameterError(f"site {a} outside the window")
        out.append(i)
    return out
