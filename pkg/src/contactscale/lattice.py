"""Finite site sets the simulations run on.

Two topologies are supported:

``Box``
    The window ``B_W = [-W, W]^d`` of Z^d with nearest-neighbour edges.
    Edges leaving the window are simply absent; sites with ``||x||_inf == W``
    are *boundary* sites and are used for contamination bookkeeping.
``Ring``
    The cycle Z/nZ (d = 1). Each site has two outgoing edge lanes, so for
    n = 2 both lanes of a site point at the same neighbour (double edge).

Sites are exposed as coordinate tuples; internally they are integer indices
whose natural order coincides with lexicographic order of the coordinates.
"""

from __future__ import annotations

import functools
import itertools
from typing import Iterable, Sequence

import numpy as np

from . import _hashing

Site = tuple  # tuple[int, ...]


def as_site(x, d: int) -> Site:
    """Coerce an int (d = 1) or a sequence of ints into a coordinate tuple."""
    if isinstance(x, (int, np.integer)):
        if d != 1:
            raise ValueError(f"scalar site {x!r} given for dimension {d}")
        return (int(x),)
    site = tuple(int(c) for c in x)
    if len(site) != d:
        raise ValueError(f"site {x!r} does not have dimension {d}")
    return site


def sup_norm(x: Sequence[int]) -> int:
    return max((abs(c) for c in x), default=0)


def sup_dist(x: Sequence[int], y: Sequence[int]) -> int:
    return max(abs(a - b) for a, b in zip(x, y))


def l1_dist(x: Sequence[int], y: Sequence[int]) -> int:
    return sum(abs(a - b) for a, b in zip(x, y))


def ball(center: Sequence[int], r: int) -> list[Site]:
    """Sites of ``B_r^center`` in lexicographic order."""
    ranges = [range(c - r, c + r + 1) for c in center]
    return [tuple(p) for p in itertools.product(*ranges)]


def sphere(center: Sequence[int], r: int) -> list[Site]:
    """Discrete sphere ``D_r^center = B_r^center minus B_{r-1}^center``."""
    if r == 0:
        return [tuple(center)]
    return [x for x in ball(center, r) if sup_dist(x, center) == r]


def priority_key(site: Sequence[int]):
    """Default total order on Z^d: sup-norm first, then lexicographic."""
    return (sup_norm(site), tuple(site))


class Topology:
    d: int
    n_sites: int
    n_dirs: int
    periodic: bool

    # -- index/coordinate maps -------------------------------------------
    def coords(self, idx: int) -> Site:
        raise NotImplementedError

    def index(self, site: Sequence[int]) -> int:
        """Index of ``site``, or -1 if it is outside the window."""
        raise NotImplementedError

    def contains(self, site: Sequence[int]) -> bool:
        return self.index(site) >= 0

    def site(self, x) -> Site:
        return as_site(x, self.d)

    def all_sites(self) -> list[Site]:
        return [self.coords(i) for i in range(self.n_sites)]

    # -- tables consumed by the kernels -----------------------------------
    @functools.cached_property
    def neighbors(self) -> np.ndarray:
        """``(n_sites, n_dirs)`` int64 table; -1 marks an absent edge."""
        raise NotImplementedError

    @functools.cached_property
    def boundary(self) -> np.ndarray:
        raise NotImplementedError

    @functools.cached_property
    def site_keys(self) -> np.ndarray:
        return np.array(
            [_hashing.site_key(self.coords(i)) for i in range(self.n_sites)],
            dtype=np.uint64,
        )

    @functools.cached_property
    def lane_keys(self) -> np.ndarray:
        """Per-lane stream keys, shape ``(n_sites, n_dirs + 1)``.

        Lane 0 of a site is its recovery lane; lane ``1 + j`` carries arrows
        in direction ``j``.
        """
        out = np.empty((self.n_sites, self.n_dirs + 1), dtype=np.uint64)
        for i, sk in enumerate(self.site_keys):
            for j in range(self.n_dirs + 1):
                out[i, j] = _hashing.lane_key(int(sk), j)
        return out

    def indices(self, sites: Iterable) -> np.ndarray:
        idx = [self.index(self.site(s)) for s in sites]
        if any(i < 0 for i in idx):
            raise ValueError("site outside the window")
        return np.array(sorted(set(idx)), dtype=np.int64)

    def canonical(self, sites: Iterable[Site]) -> tuple:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Box(Topology):
    """The window ``[-W, W]^d``."""

    periodic = False

    def __init__(self, d: int, W: int):
        if d < 1 or W < 1:
            raise ValueError("Box needs d >= 1 and W >= 1")
        self.d = int(d)
        self.W = int(W)
        self.side = 2 * self.W + 1
        self.n_sites = self.side**self.d
        self.n_dirs = 2 * self.d

    def __repr__(self):
        return f"Box(d={self.d}, W={self.W})"

    def __eq__(self, other):
        return isinstance(other, Box) and (self.d, self.W) == (other.d, other.W)

    def __hash__(self):
        return hash(("box", self.d, self.W))

    def coords(self, idx: int) -> Site:
        out = []
        for _ in range(self.d):
            idx, r = divmod(idx, self.side)
            out.append(r - self.W)
        return tuple(reversed(out))

    def index(self, site: Sequence[int]) -> int:
        idx = 0
        for c in site:
            if c < -self.W or c > self.W:
                return -1
            idx = idx * self.side + (c + self.W)
        return idx

    def step(self, site: Site, j: int) -> Site:
        axis, neg = divmod(j, 2)
        s = list(site)
        s[axis] += -1 if neg else 1
        return tuple(s)

    @functools.cached_property
    def neighbors(self) -> np.ndarray:
        nbr = np.full((self.n_sites, self.n_dirs), -1, dtype=np.int64)
        for i in range(self.n_sites):
            x = self.coords(i)
            for j in range(self.n_dirs):
                nbr[i, j] = self.index(self.step(x, j))
        return nbr

    @functools.cached_property
    def boundary(self) -> np.ndarray:
        return np.array(
            [sup_norm(self.coords(i)) == self.W for i in range(self.n_sites)],
            dtype=np.uint8,
        )

    def canonical(self, sites: Iterable[Site]) -> tuple:
        s = sorted(sites)
        if not s:
            return ()
        base = s[0]
        return tuple(tuple(a - b for a, b in zip(x, base)) for x in s)

    def describe(self) -> dict:
        return {"kind": "box", "d": self.d, "W": self.W}


class Ring(Topology):
    """The cycle on ``n`` sites; lanes 0 and 1 point to ``x+1`` and ``x-1``."""

    periodic = True
    d = 1
    n_dirs = 2

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("Ring needs n >= 2")
        self.n = int(n)
        self.n_sites = self.n

    def __repr__(self):
        return f"Ring(n={self.n})"

    def __eq__(self, other):
        return isinstance(other, Ring) and self.n == other.n

    def __hash__(self):
        return hash(("ring", self.n))

    def coords(self, idx: int) -> Site:
        return (idx,)

    def index(self, site: Sequence[int]) -> int:
        (c,) = site
        return c % self.n

    def step(self, site: Site, j: int) -> Site:
        return (((site[0] + (1 if j == 0 else -1)) % self.n),)

    @functools.cached_property
    def neighbors(self) -> np.ndarray:
        nbr = np.empty((self.n, 2), dtype=np.int64)
        for i in range(self.n):
            nbr[i, 0] = (i + 1) % self.n
            nbr[i, 1] = (i - 1) % self.n
        return nbr

    @functools.cached_property
    def boundary(self) -> np.ndarray:
        return np.zeros(self.n, dtype=np.uint8)

    def canonical(self, sites: Iterable[Site]) -> tuple:
        """Rotation class representative: the lexicographically least rotation."""
        xs = sorted({s[0] % self.n for s in sites})
        if not xs:
            return ()
        best = None
        for r in xs:
            cand = tuple(sorted(((x - r) % self.n,) for x in xs))
            if best is None or cand < best:
                best = cand
        return best

    def describe(self) -> dict:
        return {"kind": "ring", "n": self.n}


def topology_from_dict(desc: dict) -> Topology:
    if desc["kind"] == "box":
        return Box(desc["d"], desc["W"])
    if desc["kind"] == "ring":
        return Ring(desc["n"])
    raise ValueError(f"unknown topology kind {desc['kind']!r}")
