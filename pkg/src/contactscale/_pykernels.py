"""Pure-Python kernels.

Reference implementation of the three hot routines; ``_kernels.pyx`` mirrors
it operation for operation and the test-suite checks both agree bit for bit.

Lane numbering: lane ``l`` belongs to site ``l // (m + 1)`` where ``m`` is the
number of edge directions; ``l % (m + 1) == 0`` is the recovery lane and
``1 + j`` the arrow lane in direction ``j``.  Events with equal times are
ordered by lane number.
"""

import heapq
import math

import numpy as np

from ._hashing import replica_key, mix64, uniform

INF = math.inf


def generate_lanes(seed, replica, lane_keys, rates, horizon):
    """All events of the given lanes in ``[0, horizon]``.

    Returns ``(times, lane_positions)`` grouped by lane, time-sorted within
    each lane.
    """
    rkey = replica_key(int(seed), int(replica))
    times = []
    lanes = []
    for pos in range(len(lane_keys)):
        rate = float(rates[pos])
        if rate <= 0.0:
            continue
        stream = mix64(rkey ^ int(lane_keys[pos]))
        t = 0.0
        k = 0
        while True:
            t += -math.log(uniform(stream, k)) / rate
            k += 1
            if t > horizon:
                break
            times.append(t)
            lanes.append(pos)
    return np.array(times, dtype=np.float64), np.array(lanes, dtype=np.int64)


class _Lanes:
    """Lazily generated lane cursors for one replica."""

    __slots__ = ("rkey", "keys", "rates", "m1", "next_t", "k", "stream")

    def __init__(self, rkey, lane_keys_flat, lam, m1):
        self.rkey = rkey
        self.keys = lane_keys_flat
        self.rates = (1.0, lam)
        self.m1 = m1
        self.next_t = {}
        self.k = {}
        self.stream = {}

    def _draw(self, lane):
        rate = self.rates[0] if lane % self.m1 == 0 else self.rates[1]
        k = self.k[lane]
        self.next_t[lane] += -math.log(uniform(self.stream[lane], k)) / rate
        self.k[lane] = k + 1

    def advance_past(self, lane, now, inclusive=False):
        """Move the cursor to the first event ``> now`` (``>= now`` if inclusive)."""
        if lane not in self.next_t:
            self.stream[lane] = mix64(self.rkey ^ int(self.keys[lane]))
            self.next_t[lane] = 0.0
            self.k[lane] = 0
            self._draw(lane)
        if inclusive:
            while self.next_t[lane] < now:
                self._draw(lane)
        else:
            while self.next_t[lane] <= now:
                self._draw(lane)
        return self.next_t[lane]

    def step(self, lane):
        self._draw(lane)
        return self.next_t[lane]


def simulate_batch(seed, replica_start, count, nbr, lane_keys, lam, init_sites,
                   horizon, grid, boundary, obs_mask, track_outside):
    """Event-driven contact process for ``count`` consecutive replicas.

    Only lanes of *active* sites are generated: occupied sites, plus in
    ``track_outside`` mode the tainted sites (boundary sites are permanently
    tainted; taint spreads along arrows and is cleared by recovery).

    Returns ``(ext_time, snap_offsets, snap_sites, contaminated, n_events)``.
    """
    nbr = np.asarray(nbr, dtype=np.int64)
    n_sites, m = nbr.shape
    m1 = m + 1
    keys = np.asarray(lane_keys, dtype=np.uint64).reshape(-1)
    grid = np.asarray(grid, dtype=np.float64)
    G = len(grid)
    boundary = np.asarray(boundary, dtype=np.uint8)
    obs_mask = np.asarray(obs_mask, dtype=np.uint8)
    init_sites = [int(i) for i in init_sites]

    ext_time = np.full(count, INF)
    contaminated = np.zeros((count, G), dtype=np.uint8)
    n_events = np.zeros(count, dtype=np.int64)
    offsets = [0]
    snap_sites = []

    for r in range(count):
        lanes = _Lanes(replica_key(int(seed), int(replica_start) + r), keys, lam, m1)
        occ = bytearray(n_sites)
        taint = bytearray(n_sites)
        in_heap = set()
        heap = []
        n_occ = 0
        n_taint_obs = 0
        boundary_hit = False

        def active(x):
            return occ[x] or taint[x]

        def activate(x, now, inclusive):
            for j in range(m1):
                if j > 0 and nbr[x, j - 1] < 0:
                    continue
                lane = x * m1 + j
                if lane in in_heap:
                    continue
                t = lanes.advance_past(lane, now, inclusive)
                heapq.heappush(heap, (t, lane))
                in_heap.add(lane)

        for x in init_sites:
            if not occ[x]:
                occ[x] = 1
                n_occ += 1
                if boundary[x]:
                    boundary_hit = True
        if track_outside:
            for x in range(n_sites):
                if boundary[x]:
                    taint[x] = 1
                    if obs_mask[x]:
                        n_taint_obs += 1
        for x in range(n_sites):
            if active(x):
                activate(x, 0.0, True)

        gi = 0
        ext = INF if n_occ > 0 else 0.0
        nev = 0

        def snapshot():
            snap_sites.extend(i for i in range(n_sites) if occ[i])
            offsets.append(len(snap_sites))
            if track_outside:
                contaminated[r, gi] = 1 if n_taint_obs > 0 else 0
            else:
                contaminated[r, gi] = 1 if boundary_hit else 0

        if n_occ > 0 or track_outside:
            while heap and heap[0][0] <= horizon:
                tau, lane = heapq.heappop(heap)
                in_heap.discard(lane)
                x, j = divmod(lane, m1)
                if not active(x):
                    continue
                while gi < G and grid[gi] < tau:
                    snapshot()
                    gi += 1
                nev += 1
                if j == 0:
                    if occ[x]:
                        occ[x] = 0
                        n_occ -= 1
                    if track_outside and taint[x] and not boundary[x]:
                        taint[x] = 0
                        if obs_mask[x]:
                            n_taint_obs -= 1
                else:
                    y = int(nbr[x, j - 1])
                    newly = False
                    if occ[x] and not occ[y]:
                        occ[y] = 1
                        n_occ += 1
                        newly = True
                        if boundary[y]:
                            boundary_hit = True
                    if track_outside and taint[x] and not taint[y]:
                        taint[y] = 1
                        if obs_mask[y]:
                            n_taint_obs += 1
                        newly = True
                    if newly:
                        activate(y, tau, False)
                if active(x):
                    heapq.heappush(heap, (lanes.step(lane), lane))
                    in_heap.add(lane)
                if n_occ == 0 and ext == INF:
                    ext = tau
                    if not track_outside:
                        break
        while gi < G:
            snapshot()
            gi += 1
        ext_time[r] = ext
        n_events[r] = nev

    return (ext_time, np.array(offsets, dtype=np.int64),
            np.array(snap_sites, dtype=np.int64), contaminated, n_events)


def max_jumps_batch(seed, replica_start, count, nbr, lane_keys, lam, start,
                    s0, duration, boundary):
    """Forward DP for the largest number of jumps of a lambda-path.

    Recovery marks are ignored; arrow lanes of a site are generated once the
    site is reached.  Returns ``(jumps, overflow)`` per replica, ``overflow``
    flagging that some lambda-path reached a boundary site.
    """
    nbr = np.asarray(nbr, dtype=np.int64)
    n_sites, m = nbr.shape
    m1 = m + 1
    keys = np.asarray(lane_keys, dtype=np.uint64).reshape(-1)
    boundary = np.asarray(boundary, dtype=np.uint8)
    t_end = s0 + duration
    jumps = np.zeros(count, dtype=np.int64)
    overflow = np.zeros(count, dtype=np.uint8)
    for r in range(count):
        lanes = _Lanes(replica_key(int(seed), int(replica_start) + r), keys, lam, m1)
        J = {}
        heap = []

        def reach(x, now, inclusive):
            for j in range(1, m1):
                if nbr[x, j - 1] < 0:
                    continue
                lane = x * m1 + j
                heapq.heappush(heap, (lanes.advance_past(lane, now, inclusive), lane))

        J[int(start)] = 0
        if boundary[start]:
            overflow[r] = 1
        reach(int(start), s0, True)
        while heap and heap[0][0] <= t_end:
            tau, lane = heapq.heappop(heap)
            x, j = divmod(lane, m1)
            y = int(nbr[x, j - 1])
            v = J[x] + 1
            if y not in J:
                J[y] = v
                if boundary[y]:
                    overflow[r] = 1
                reach(y, tau, False)
            elif v > J[y]:
                J[y] = v
            heapq.heappush(heap, (lanes.step(lane), lane))
        jumps[r] = max(J.values())
    return jumps, overflow
