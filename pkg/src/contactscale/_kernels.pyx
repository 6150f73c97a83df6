# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; a line-by-line mirror of ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, INFINITY
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, realloc, free
from libc.string cimport memset

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t SEED_SALT = 0x6A09E667F3BCC909ULL
cdef double TWO_M52 = 2.220446049250313e-16


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t replica_key(uint64_t seed, uint64_t replica) noexcept nogil:
    cdef uint64_t s = mix64(seed ^ SEED_SALT)
    return mix64(s + (replica + 1) * GOLDEN)


cdef inline double uniform(uint64_t stream, uint64_t k) noexcept nogil:
    cdef uint64_t x = mix64(stream + (k + 1) * GOLDEN)
    return (<double>(x >> 12) + 0.5) * TWO_M52


# ---------------------------------------------------------------- binary heap
cdef struct Heap:
    double* t
    int64_t* lane
    int64_t n
    int64_t cap


cdef inline bint _less(Heap* h, int64_t a, int64_t b) noexcept nogil:
    if h.t[a] < h.t[b]:
        return True
    if h.t[a] > h.t[b]:
        return False
    return h.lane[a] < h.lane[b]


cdef inline void _swap(Heap* h, int64_t a, int64_t b) noexcept nogil:
    cdef double tt = h.t[a]
    cdef int64_t ll = h.lane[a]
    h.t[a] = h.t[b]
    h.lane[a] = h.lane[b]
    h.t[b] = tt
    h.lane[b] = ll


cdef inline void heap_push(Heap* h, double t, int64_t lane) noexcept nogil:
    cdef int64_t i = h.n
    cdef int64_t p
    h.t[i] = t
    h.lane[i] = lane
    h.n += 1
    while i > 0:
        p = (i - 1) >> 1
        if _less(h, i, p):
            _swap(h, i, p)
            i = p
        else:
            break


cdef inline void heap_pop(Heap* h) noexcept nogil:
    cdef int64_t i = 0
    cdef int64_t c, r
    h.n -= 1
    h.t[0] = h.t[h.n]
    h.lane[0] = h.lane[h.n]
    while True:
        c = 2 * i + 1
        if c >= h.n:
            break
        r = c + 1
        if r < h.n and _less(h, r, c):
            c = r
        if _less(h, c, i):
            _swap(h, c, i)
            i = c
        else:
            break


# ---------------------------------------------------------------- lane cursors
cdef struct Lanes:
    uint64_t rkey
    const uint64_t* keys
    double rate_rec
    double rate_arrow
    int64_t m1
    double* next_t
    uint64_t* k
    uint64_t* stream
    uint8_t* touched
    int64_t* touched_list
    int64_t n_touched


cdef inline void lane_draw(Lanes* L, int64_t lane) noexcept nogil:
    cdef double rate = L.rate_rec if lane % L.m1 == 0 else L.rate_arrow
    L.next_t[lane] += -log(uniform(L.stream[lane], L.k[lane])) / rate
    L.k[lane] += 1


cdef inline double lane_advance(Lanes* L, int64_t lane, double now, bint inclusive) noexcept nogil:
    if not L.touched[lane]:
        L.touched[lane] = 1
        L.touched_list[L.n_touched] = lane
        L.n_touched += 1
        L.stream[lane] = mix64(L.rkey ^ L.keys[lane])
        L.next_t[lane] = 0.0
        L.k[lane] = 0
        lane_draw(L, lane)
    if inclusive:
        while L.next_t[lane] < now:
            lane_draw(L, lane)
    else:
        while L.next_t[lane] <= now:
            lane_draw(L, lane)
    return L.next_t[lane]


cdef inline void lanes_reset(Lanes* L) noexcept nogil:
    cdef int64_t i
    for i in range(L.n_touched):
        L.touched[L.touched_list[i]] = 0
    L.n_touched = 0


def generate_lanes(uint64_t seed, uint64_t replica, lane_keys, rates, double horizon):
    cdef const uint64_t[::1] keys = np.ascontiguousarray(lane_keys, dtype=np.uint64)
    cdef const double[::1] rt = np.ascontiguousarray(rates, dtype=np.float64)
    cdef int64_t L = keys.shape[0]
    cdef uint64_t rkey = replica_key(seed, replica)
    cdef int64_t cap = 64, n = 0, pos
    cdef double t, rate
    cdef uint64_t stream, k
    for pos in range(L):
        cap += <int64_t>(rt[pos] * horizon * 1.3) + 4
    times = np.empty(cap, dtype=np.float64)
    lanes = np.empty(cap, dtype=np.int64)
    cdef double[::1] tv = times
    cdef int64_t[::1] lv = lanes
    for pos in range(L):
        rate = rt[pos]
        if rate <= 0.0:
            continue
        stream = mix64(rkey ^ keys[pos])
        t = 0.0
        k = 0
        while True:
            t += -log(uniform(stream, k)) / rate
            k += 1
            if t > horizon:
                break
            if n == cap:
                cap *= 2
                times = np.resize(times, cap)
                lanes = np.resize(lanes, cap)
                tv = times
                lv = lanes
            tv[n] = t
            lv[n] = pos
            n += 1
    return times[:n].copy(), lanes[:n].copy()


cdef struct SnapBuf:
    int64_t* data
    int64_t n
    int64_t cap


cdef inline int snap_push(SnapBuf* b, int64_t v) noexcept nogil:
    cdef int64_t* nd
    if b.n == b.cap:
        nd = <int64_t*>realloc(b.data, 2 * b.cap * sizeof(int64_t))
        if nd == NULL:
            return -1
        b.data = nd
        b.cap *= 2
    b.data[b.n] = v
    b.n += 1
    return 0


def simulate_batch(uint64_t seed, uint64_t replica_start, int64_t count, nbr, lane_keys,
                   double lam, init_sites, double horizon, grid, boundary, obs_mask,
                   bint track_outside):
    cdef const int64_t[:, ::1] nb = np.ascontiguousarray(nbr, dtype=np.int64)
    cdef int64_t n_sites = nb.shape[0]
    cdef int64_t m = nb.shape[1]
    cdef int64_t m1 = m + 1
    cdef int64_t n_lanes = n_sites * m1
    cdef const uint64_t[::1] keys = np.ascontiguousarray(lane_keys, dtype=np.uint64).reshape(-1)
    cdef const double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    cdef int64_t G = gr.shape[0]
    cdef const uint8_t[::1] bnd = np.ascontiguousarray(boundary, dtype=np.uint8)
    cdef const uint8_t[::1] obs = np.ascontiguousarray(obs_mask, dtype=np.uint8)
    cdef const int64_t[::1] init = np.ascontiguousarray(init_sites, dtype=np.int64)
    cdef int64_t n_init = init.shape[0]

    ext_arr = np.full(count, np.inf)
    cont_arr = np.zeros((count, G), dtype=np.uint8)
    nev_arr = np.zeros(count, dtype=np.int64)
    off_arr = np.zeros(count * G + 1, dtype=np.int64)
    cdef double[::1] ext_v = ext_arr
    cdef uint8_t[:, ::1] cont = cont_arr
    cdef int64_t[::1] nev_v = nev_arr
    cdef int64_t[::1] off = off_arr

    cdef uint8_t* occ = <uint8_t*>malloc(n_sites)
    cdef uint8_t* taint = <uint8_t*>malloc(n_sites)
    cdef uint8_t* in_heap = <uint8_t*>malloc(n_lanes)
    cdef Lanes L
    L.keys = &keys[0]
    L.rate_rec = 1.0
    L.rate_arrow = lam
    L.m1 = m1
    L.next_t = <double*>malloc(n_lanes * sizeof(double))
    L.k = <uint64_t*>malloc(n_lanes * sizeof(uint64_t))
    L.stream = <uint64_t*>malloc(n_lanes * sizeof(uint64_t))
    L.touched = <uint8_t*>malloc(n_lanes)
    L.touched_list = <int64_t*>malloc(n_lanes * sizeof(int64_t))
    L.n_touched = 0
    cdef Heap h
    h.t = <double*>malloc(n_lanes * sizeof(double))
    h.lane = <int64_t*>malloc(n_lanes * sizeof(int64_t))
    h.cap = n_lanes
    cdef SnapBuf sb
    sb.cap = 1024
    sb.n = 0
    sb.data = <int64_t*>malloc(sb.cap * sizeof(int64_t))
    if (occ == NULL or taint == NULL or in_heap == NULL or L.next_t == NULL or L.k == NULL
            or L.stream == NULL or L.touched == NULL or L.touched_list == NULL
            or h.t == NULL or h.lane == NULL or sb.data == NULL):
        raise MemoryError()
    memset(L.touched, 0, n_lanes)
    memset(in_heap, 0, n_lanes)

    cdef int64_t r, i, x, y, j, lane, gi, n_occ, n_taint_obs, nev, oi = 0
    cdef double tau, ext, t
    cdef bint boundary_hit, newly, failed = False
    cdef int64_t q

    with nogil:
        for r in range(count):
            L.rkey = replica_key(seed, replica_start + <uint64_t>r)
            for i in range(L.n_touched):
                in_heap[L.touched_list[i]] = 0
            lanes_reset(&L)
            memset(occ, 0, n_sites)
            memset(taint, 0, n_sites)
            h.n = 0
            n_occ = 0
            n_taint_obs = 0
            boundary_hit = False
            for i in range(n_init):
                x = init[i]
                if not occ[x]:
                    occ[x] = 1
                    n_occ += 1
                    if bnd[x]:
                        boundary_hit = True
            if track_outside:
                for x in range(n_sites):
                    if bnd[x]:
                        taint[x] = 1
                        if obs[x]:
                            n_taint_obs += 1
            for x in range(n_sites):
                if occ[x] or taint[x]:
                    for j in range(m1):
                        if j > 0 and nb[x, j - 1] < 0:
                            continue
                        lane = x * m1 + j
                        if in_heap[lane]:
                            continue
                        t = lane_advance(&L, lane, 0.0, True)
                        heap_push(&h, t, lane)
                        in_heap[lane] = 1

            gi = 0
            ext = INFINITY if n_occ > 0 else 0.0
            nev = 0
            if n_occ > 0 or track_outside:
                while h.n > 0 and h.t[0] <= horizon:
                    tau = h.t[0]
                    lane = h.lane[0]
                    heap_pop(&h)
                    in_heap[lane] = 0
                    x = lane // m1
                    j = lane % m1
                    if not (occ[x] or taint[x]):
                        continue
                    while gi < G and gr[gi] < tau:
                        for q in range(n_sites):
                            if occ[q]:
                                if snap_push(&sb, q) != 0:
                                    failed = True
                        oi += 1
                        off[oi] = sb.n
                        if track_outside:
                            cont[r, gi] = 1 if n_taint_obs > 0 else 0
                        else:
                            cont[r, gi] = 1 if boundary_hit else 0
                        gi += 1
                    nev += 1
                    if j == 0:
                        if occ[x]:
                            occ[x] = 0
                            n_occ -= 1
                        if track_outside and taint[x] and not bnd[x]:
                            taint[x] = 0
                            if obs[x]:
                                n_taint_obs -= 1
                    else:
                        y = nb[x, j - 1]
                        newly = False
                        if occ[x] and not occ[y]:
                            occ[y] = 1
                            n_occ += 1
                            newly = True
                            if bnd[y]:
                                boundary_hit = True
                        if track_outside and taint[x] and not taint[y]:
                            taint[y] = 1
                            if obs[y]:
                                n_taint_obs += 1
                            newly = True
                        if newly:
                            for i in range(m1):
                                if i > 0 and nb[y, i - 1] < 0:
                                    continue
                                q = y * m1 + i
                                if in_heap[q]:
                                    continue
                                t = lane_advance(&L, q, tau, False)
                                heap_push(&h, t, q)
                                in_heap[q] = 1
                    if occ[x] or taint[x]:
                        lane_draw(&L, lane)
                        heap_push(&h, L.next_t[lane], lane)
                        in_heap[lane] = 1
                    if n_occ == 0 and ext == INFINITY:
                        ext = tau
                        if not track_outside:
                            break
            while gi < G:
                for q in range(n_sites):
                    if occ[q]:
                        if snap_push(&sb, q) != 0:
                            failed = True
                oi += 1
                off[oi] = sb.n
                if track_outside:
                    cont[r, gi] = 1 if n_taint_obs > 0 else 0
                else:
                    cont[r, gi] = 1 if boundary_hit else 0
                gi += 1
            ext_v[r] = ext
            nev_v[r] = nev

    sites_arr = np.empty(sb.n, dtype=np.int64)
    cdef int64_t[::1] sv = sites_arr
    for i in range(sb.n):
        sv[i] = sb.data[i]
    free(occ)
    free(taint)
    free(in_heap)
    free(L.next_t)
    free(L.k)
    free(L.stream)
    free(L.touched)
    free(L.touched_list)
    free(h.t)
    free(h.lane)
    free(sb.data)
    if failed:
        raise MemoryError("snapshot buffer")
    return ext_arr, off_arr, sites_arr, cont_arr, nev_arr


def max_jumps_batch(uint64_t seed, uint64_t replica_start, int64_t count, nbr, lane_keys,
                    double lam, int64_t start, double s0, double duration, boundary):
    cdef const int64_t[:, ::1] nb = np.ascontiguousarray(nbr, dtype=np.int64)
    cdef int64_t n_sites = nb.shape[0]
    cdef int64_t m = nb.shape[1]
    cdef int64_t m1 = m + 1
    cdef int64_t n_lanes = n_sites * m1
    cdef const uint64_t[::1] keys = np.ascontiguousarray(lane_keys, dtype=np.uint64).reshape(-1)
    cdef const uint8_t[::1] bnd = np.ascontiguousarray(boundary, dtype=np.uint8)
    cdef double t_end = s0 + duration

    jumps_arr = np.zeros(count, dtype=np.int64)
    over_arr = np.zeros(count, dtype=np.uint8)
    cdef int64_t[::1] jv = jumps_arr
    cdef uint8_t[::1] ov = over_arr

    cdef int64_t* J = <int64_t*>malloc(n_sites * sizeof(int64_t))
    cdef int64_t* reached = <int64_t*>malloc(n_sites * sizeof(int64_t))
    cdef Lanes L
    L.keys = &keys[0]
    L.rate_rec = 1.0
    L.rate_arrow = lam
    L.m1 = m1
    L.next_t = <double*>malloc(n_lanes * sizeof(double))
    L.k = <uint64_t*>malloc(n_lanes * sizeof(uint64_t))
    L.stream = <uint64_t*>malloc(n_lanes * sizeof(uint64_t))
    L.touched = <uint8_t*>malloc(n_lanes)
    L.touched_list = <int64_t*>malloc(n_lanes * sizeof(int64_t))
    L.n_touched = 0
    cdef Heap h
    h.t = <double*>malloc(n_lanes * sizeof(double))
    h.lane = <int64_t*>malloc(n_lanes * sizeof(int64_t))
    h.cap = n_lanes
    if (J == NULL or reached == NULL or L.next_t == NULL or L.k == NULL or L.stream == NULL
            or L.touched == NULL or L.touched_list == NULL or h.t == NULL or h.lane == NULL):
        raise MemoryError()
    memset(L.touched, 0, n_lanes)
    cdef int64_t r, i, x, y, j, lane, n_reached, v, best
    cdef double tau

    with nogil:
        for i in range(n_sites):
            J[i] = -1
        for r in range(count):
            L.rkey = replica_key(seed, replica_start + <uint64_t>r)
            lanes_reset(&L)
            h.n = 0
            n_reached = 0
            J[start] = 0
            reached[n_reached] = start
            n_reached += 1
            if bnd[start]:
                ov[r] = 1
            for j in range(1, m1):
                if nb[start, j - 1] < 0:
                    continue
                lane = start * m1 + j
                heap_push(&h, lane_advance(&L, lane, s0, True), lane)
            while h.n > 0 and h.t[0] <= t_end:
                tau = h.t[0]
                lane = h.lane[0]
                heap_pop(&h)
                x = lane // m1
                j = lane % m1
                y = nb[x, j - 1]
                v = J[x] + 1
                if J[y] < 0:
                    J[y] = v
                    reached[n_reached] = y
                    n_reached += 1
                    if bnd[y]:
                        ov[r] = 1
                    for i in range(1, m1):
                        if nb[y, i - 1] < 0:
                            continue
                        heap_push(&h, lane_advance(&L, y * m1 + i, tau, False), y * m1 + i)
                elif v > J[y]:
                    J[y] = v
                lane_draw(&L, lane)
                heap_push(&h, L.next_t[lane], lane)
            best = 0
            for i in range(n_reached):
                if J[reached[i]] > best:
                    best = J[reached[i]]
                J[reached[i]] = -1
            jv[r] = best
    free(J)
    free(reached)
    free(L.next_t)
    free(L.k)
    free(L.stream)
    free(L.touched)
    free(L.touched_list)
    free(h.t)
    free(h.lane)
    return jumps_arr, over_arr
