# cython: language_level=3
"""Compiled kernels: gossip round loop and betweenness accumulation.

This module mirrors peermap._pure operation for operation; both consume the
shared splitmix64 stream in the same order and sequence float arithmetic
identically, so results are bit-identical across backends. Any semantic
change must land in both files.
"""

import numpy as np

cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline unsigned long long _next(unsigned long long* state) nogil:
    state[0] = state[0] + _GOLDEN
    return _mix64(state[0])


cdef long long _kth_smallest(long long* a, long long length, long long k) nogil:
    # nth_element by Hoare partition; scrambles a, returns the k-th smallest
    # (0-based). Keys are unique in every call site.
    cdef long long lo = 0
    cdef long long hi = length - 1
    cdef long long i, j, pivot, tmp
    while lo < hi:
        pivot = a[lo + (hi - lo) // 2]
        i = lo - 1
        j = hi + 1
        while True:
            i += 1
            while a[i] < pivot:
                i += 1
            j -= 1
            while a[j] > pivot:
                j -= 1
            if i >= j:
                break
            tmp = a[i]
            a[i] = a[j]
            a[j] = tmp
        if k <= j:
            hi = j
        else:
            lo = j + 1
    return a[lo]


cdef long long _gather_members(int[:, ::1] ls, long long i, long long n,
                               long long rounds, long long[::1] tie,
                               int[::1] mem, long long[::1] keys) nogil:
    # Whitelist members of node i ascending by id, with their selection keys.
    # Ascending key == (last_seen desc, tie_rank asc).
    cdef long long m = 0
    cdef long long j
    for j in range(n):
        if ls[i, j] >= 0:
            mem[m] = <int>j
            keys[m] = ((rounds - <long long>ls[i, j]) << 31) | tie[j]
            m += 1
    return m


def sim_rounds(int[:, ::1] ls,
               long long[::1] indptr,
               int[::1] indices,
               long long rounds,
               long long period,
               long long cap,
               long long top_window,
               long long resp_size,
               long long ping_count,
               object seed_state,
               unsigned char[::1] observer_mask,
               int[::1] obs_round,
               int[::1] obs_source,
               int[::1] obs_observer,
               int[::1] obs_len,
               int[::1] obs_peers):
    """Drive the gossip round loop; see peermap._pure.sim_rounds."""
    cdef long long n = ls.shape[0]
    cdef unsigned long long state = <unsigned long long>(int(seed_state) & ((1 << 64) - 1))
    cdef long long dir_count = indices.shape[0]
    cdef long long win_cap = top_window if top_window < n else n
    if win_cap < 1:
        win_cap = 1
    cdef long long resp_cap = resp_size if resp_size < win_cap else win_cap
    cdef long long obs_cap = 0
    if obs_round.shape[0] > 0:
        obs_cap = obs_peers.shape[0] // obs_round.shape[0]

    perm_arr = np.arange(n, dtype=np.int64)
    tie_arr = np.zeros(n, dtype=np.int64)
    mem_arr = np.empty(n, dtype=np.int32)
    keys_arr = np.empty(n, dtype=np.int64)
    scratch_arr = np.empty(n, dtype=np.int64)
    win_arr = np.empty(n * win_cap, dtype=np.int32)
    win_len_arr = np.empty(n, dtype=np.int64)
    posmask_arr = np.zeros(win_cap, dtype=np.uint8)
    resp_ids_arr = np.empty(dir_count * resp_cap, dtype=np.int32)
    resp_vals_arr = np.empty(dir_count * resp_cap, dtype=np.int32)
    resp_src_arr = np.empty(dir_count, dtype=np.int64)
    resp_dst_arr = np.empty(dir_count, dtype=np.int64)
    resp_len_arr = np.empty(dir_count, dtype=np.int64)
    wl_size_arr = np.empty(n, dtype=np.int64)

    cdef long long[::1] perm = perm_arr
    cdef long long[::1] tie = tie_arr
    cdef int[::1] mem = mem_arr
    cdef long long[::1] keys = keys_arr
    cdef long long[::1] scratch = scratch_arr
    cdef int[::1] win = win_arr
    cdef long long[::1] win_len = win_len_arr
    cdef unsigned char[::1] posmask = posmask_arr
    cdef int[::1] resp_ids = resp_ids_arr
    cdef int[::1] resp_vals = resp_vals_arr
    cdef long long[::1] resp_src = resp_src_arr
    cdef long long[::1] resp_dst = resp_dst_arr
    cdef long long[::1] resp_len = resp_len_arr
    cdef long long[::1] wl_size = wl_size_arr

    cdef long long r, i, j, k, t, u, m, want, got, kth, e, src, dst
    cdef long long wlen, rlen, nresp, obs_n, max_wl, base, obase, a, peak
    cdef long long tmp

    obs_n = 0
    max_wl = 0
    for i in range(n):
        m = 0
        for j in range(n):
            if ls[i, j] >= 0:
                m += 1
        wl_size[i] = m
        if m > max_wl:
            max_wl = m

    for r in range(1, rounds + 1):
        if r % period != 0:
            continue

        # Phase 1: tie-break permutation (n-1 draws).
        for t in range(n):
            perm[t] = t
        for t in range(n - 1):
            u = t + <long long>(_next(&state) % <unsigned long long>(n - t))
            tmp = perm[t]
            perm[t] = perm[u]
            perm[u] = tmp
        for t in range(n):
            tie[perm[t]] = t

        # Phase 2: windows from round-start state.
        for i in range(n):
            m = _gather_members(ls, i, n, rounds, tie, mem, keys)
            want = (top_window * wl_size[i] + cap - 1) // cap
            if want > top_window:
                want = top_window
            if want >= m:
                for t in range(m):
                    win[i * win_cap + t] = mem[t]
                win_len[i] = m
            else:
                for t in range(m):
                    scratch[t] = keys[t]
                kth = _kth_smallest(&scratch[0], m, want - 1)
                got = 0
                for t in range(m):
                    if keys[t] <= kth:
                        win[i * win_cap + got] = mem[t]
                        got += 1
                win_len[i] = got

        # Phase 3: responses and observations (round-start state only).
        nresp = 0
        for i in range(n):
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if j <= i:
                    continue
                for k in range(2):
                    if k == 0:
                        src = i
                        dst = j
                    else:
                        src = j
                        dst = i
                    wlen = win_len[src]
                    base = nresp * resp_cap
                    if wlen > resp_size:
                        # Sample positions, then emit in window (ascending id)
                        # order; matches a value shuffle plus sort.
                        for t in range(wlen):
                            perm[t] = t
                        for t in range(resp_size):
                            u = t + <long long>(_next(&state) % <unsigned long long>(wlen - t))
                            tmp = perm[t]
                            perm[t] = perm[u]
                            perm[u] = tmp
                        for t in range(resp_size):
                            posmask[perm[t]] = 1
                        rlen = 0
                        for t in range(wlen):
                            if posmask[t]:
                                resp_ids[base + rlen] = win[src * win_cap + t]
                                rlen += 1
                                posmask[t] = 0
                    else:
                        rlen = wlen
                        for t in range(wlen):
                            resp_ids[base + t] = win[src * win_cap + t]
                    for t in range(rlen):
                        resp_vals[base + t] = ls[src, resp_ids[base + t]]
                    resp_src[nresp] = src
                    resp_dst[nresp] = dst
                    resp_len[nresp] = rlen
                    if observer_mask[dst]:
                        obs_round[obs_n] = <int>r
                        obs_source[obs_n] = <int>src
                        obs_observer[obs_n] = <int>dst
                        obs_len[obs_n] = <int>rlen
                        obase = obs_n * obs_cap
                        for t in range(rlen):
                            obs_peers[obase + t] = resp_ids[base + t]
                        obs_n += 1
                    nresp += 1

        # Phase 4: merges. Gossip only introduces unknown addresses (stale
        # last_seen); direct contact refreshes.
        for e in range(nresp):
            src = resp_src[e]
            dst = resp_dst[e]
            base = e * resp_cap
            for t in range(resp_len[e]):
                a = resp_ids[base + t]
                if a == dst:
                    continue
                if ls[dst, a] < 0:
                    ls[dst, a] = resp_vals[base + t]
                    wl_size[dst] += 1
            if ls[dst, src] < 0:
                wl_size[dst] += 1
            ls[dst, src] = <int>r

        # Phase 5: liveness pings (ping_count draws per node).
        if ping_count > 0:
            for i in range(n):
                m = 0
                for j in range(n):
                    if ls[i, j] >= 0:
                        mem[m] = <int>j
                        m += 1
                if m > 0:
                    for t in range(ping_count):
                        k = <long long>(_next(&state) % <unsigned long long>m)
                        ls[i, mem[k]] = <int>r
                else:
                    for t in range(ping_count):
                        _next(&state)

        # Phase 6: eviction down to the cap.
        for i in range(n):
            if wl_size[i] <= cap:
                continue
            m = _gather_members(ls, i, n, rounds, tie, mem, keys)
            for t in range(m):
                scratch[t] = keys[t]
            kth = _kth_smallest(&scratch[0], m, cap - 1)
            for t in range(m):
                if keys[t] > kth:
                    ls[i, mem[t]] = -1
            wl_size[i] = cap

        peak = 0
        for i in range(n):
            if wl_size[i] > peak:
                peak = wl_size[i]
        if peak > max_wl:
            max_wl = peak

    return int(obs_n), int(max_wl)


def brandes_block(long long[::1] indptr, int[::1] indices,
                  long long s_start, long long s_end):
    """Pair-dependency sums for sources in [s_start, s_end); GIL released."""
    cdef long long n = indptr.shape[0] - 1
    out_arr = np.zeros(n, dtype=np.float64)
    dist_arr = np.empty(n, dtype=np.int64)
    sigma_arr = np.empty(n, dtype=np.float64)
    delta_arr = np.empty(n, dtype=np.float64)
    queue_arr = np.empty(n, dtype=np.int64)

    cdef double[::1] out = out_arr
    cdef long long[::1] dist = dist_arr
    cdef double[::1] sigma = sigma_arr
    cdef double[::1] delta = delta_arr
    cdef long long[::1] queue = queue_arr

    cdef long long s, v, w, k, head, tail, idx, dv, dw
    cdef double sv, coeff

    with nogil:
        for s in range(s_start, s_end):
            for v in range(n):
                dist[v] = -1
                sigma[v] = 0.0
                delta[v] = 0.0
            queue[0] = s
            dist[s] = 0
            sigma[s] = 1.0
            head = 0
            tail = 1
            while head < tail:
                v = queue[head]
                head += 1
                dv = dist[v]
                sv = sigma[v]
                for k in range(indptr[v], indptr[v + 1]):
                    w = indices[k]
                    if dist[w] < 0:
                        dist[w] = dv + 1
                        queue[tail] = w
                        tail += 1
                    if dist[w] == dv + 1:
                        sigma[w] = sigma[w] + sv
            # queue[0:tail] is BFS order; accumulate in reverse.
            for idx in range(tail - 1, 0, -1):
                w = queue[idx]
                coeff = (1.0 + delta[w]) / sigma[w]
                dw = dist[w]
                for k in range(indptr[w], indptr[w + 1]):
                    v = indices[k]
                    if dist[v] == dw - 1:
                        delta[v] = delta[v] + sigma[v] * coeff
            for idx in range(tail):
                v = queue[idx]
                if v != s:
                    out[v] = out[v] + delta[v]

    return out_arr
