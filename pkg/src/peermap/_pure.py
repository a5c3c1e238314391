"""Pure-Python fallback kernels.

These mirror the compiled versions in ``peermap._native`` operation for
operation: both consume the same RNG stream in the same order and perform
float arithmetic in the same sequence, so outputs are bit-identical across
backends. Any change here must be mirrored there.
"""

from __future__ import annotations

import numpy as np

from .rng import GOLDEN, MASK64, SplitMix64, mix64

_KEY_SHIFT = np.int64(31)


def _selection_keys(ls_vals: np.ndarray, tie: np.ndarray, rounds: int) -> np.ndarray:
    # Ascending key order == (last_seen desc, tie_rank asc). Unique because
    # tie_rank is a permutation.
    stale = (np.int64(rounds) - ls_vals.astype(np.int64)) << _KEY_SHIFT
    return stale | tie.astype(np.int64)


def _top_members(ls_row: np.ndarray, tie: np.ndarray, keep: int, rounds: int) -> np.ndarray:
    """The ``keep`` highest-ranked whitelist members, ascending by node id."""
    members = np.nonzero(ls_row >= 0)[0]
    if keep >= members.size:
        return members.astype(np.int32)
    keys = _selection_keys(ls_row[members], tie[members], rounds)
    kth = np.partition(keys, keep - 1)[keep - 1]
    return members[keys <= kth].astype(np.int32)


def sim_rounds(
    ls: np.ndarray,
    indptr: np.ndarray,
    indices: np.ndarray,
    rounds: int,
    period: int,
    cap: int,
    top_window: int,
    resp_size: int,
    ping_count: int,
    seed_state: int,
    observer_mask: np.ndarray,
    obs_round: np.ndarray,
    obs_source: np.ndarray,
    obs_observer: np.ndarray,
    obs_len: np.ndarray,
    obs_peers: np.ndarray,
) -> tuple[int, int]:
    """Drive the gossip round loop. Returns (observation count, max whitelist).

    ``ls`` is the n x n last-seen matrix (-1 = not in whitelist), mutated in
    place. Observation buffers are filled in canonical order: rounds
    ascending, then edge (i, j) with i < j ascending, response i->j before
    j->i. Peer ids within a response are ascending.
    """
    n = ls.shape[0]
    rng = SplitMix64(seed_state)
    wl_size = (ls >= 0).sum(axis=1).astype(np.int64)
    max_wl = int(wl_size.max()) if n else 0
    resp_cap = obs_peers.shape[0] // max(obs_round.shape[0], 1) if obs_round.shape[0] else 0
    obs_n = 0
    tie = np.zeros(n, dtype=np.int64)
    perm = np.arange(n, dtype=np.int64)

    for r in range(1, rounds + 1):
        if r % period != 0:
            continue

        # Phase 1: per-round tie-break ranks (Fisher-Yates, n-1 draws).
        perm[:] = np.arange(n)
        draws = rng.next_batch(n - 1) if n > 1 else np.empty(0, dtype=np.uint64)
        for t in range(n - 1):
            u = t + int(draws[t] % np.uint64(n - t))
            perm[t], perm[u] = perm[u], perm[t]
        tie[perm] = np.arange(n)

        # Phase 2: windows from round-start state.
        windows: list[np.ndarray] = []
        for i in range(n):
            size = int(wl_size[i])
            want = -(-top_window * size // cap)  # ceil
            if want > top_window:
                want = top_window
            windows.append(_top_members(ls[i], tie, want, rounds))

        # Phase 3: responses (reads only; merges deferred so every response
        # reflects the same round-start state).
        responses: list[tuple[int, int, np.ndarray, np.ndarray]] = []
        for i in range(n):
            for j in indices[indptr[i]:indptr[i + 1]]:
                j = int(j)
                if j <= i:
                    continue
                for src, dst in ((i, j), (j, i)):
                    win = windows[src]
                    if win.size > resp_size:
                        buf = win.copy()
                        for t in range(resp_size):
                            u = t + rng.next_below(buf.size - t)
                            buf[t], buf[u] = buf[u], buf[t]
                        resp = np.sort(buf[:resp_size])
                    else:
                        resp = win
                    vals = ls[src][resp].copy()
                    responses.append((src, dst, resp, vals))
                    if observer_mask[dst]:
                        obs_round[obs_n] = r
                        obs_source[obs_n] = src
                        obs_observer[obs_n] = dst
                        obs_len[obs_n] = resp.size
                        obs_peers[obs_n * resp_cap:obs_n * resp_cap + resp.size] = resp
                        obs_n += 1

        # Phase 4: merges. Gossip only introduces unknown addresses (with the
        # advertiser's stale last_seen); it never refreshes existing entries.
        # Only direct contact (the exchange itself, or a ping below) does.
        for src, dst, resp, vals in responses:
            row = ls[dst]
            mask = (row[resp] < 0) & (resp != dst)
            if mask.any():
                fresh = resp[mask]
                row[fresh] = vals[mask]
                wl_size[dst] += fresh.size
            if row[src] < 0:
                wl_size[dst] += 1
            row[src] = r

        # Phase 5: liveness pings. Each node refreshes ping_count uniform
        # draws from its whitelist (with replacement), emulating background
        # peer maintenance; this is what keeps non-partner recency ranks
        # churning instead of freezing at their insertion values.
        if ping_count > 0:
            for i in range(n):
                members = np.nonzero(ls[i] >= 0)[0]
                draws = rng.next_batch(ping_count)
                if members.size:
                    targets = members[(draws % np.uint64(members.size)).astype(np.int64)]
                    ls[i][targets] = r

        # Phase 6: eviction down to the cap.
        for i in range(n):
            if wl_size[i] <= cap:
                continue
            row = ls[i]
            members = np.nonzero(row >= 0)[0]
            keys = _selection_keys(row[members], tie[members], rounds)
            kth = np.partition(keys, cap - 1)[cap - 1]
            row[members[keys > kth]] = -1
            wl_size[i] = cap

        peak = int(wl_size.max()) if n else 0
        if peak > max_wl:
            max_wl = peak

    return obs_n, max_wl


def brandes_block(
    indptr: np.ndarray, indices: np.ndarray, s_start: int, s_end: int
) -> np.ndarray:
    """Pair-dependency sums for sources in [s_start, s_end).

    Standard breadth-first Brandes accumulation. Summing all blocks gives
    the directed dependency total; halve it for undirected betweenness.
    """
    n = indptr.shape[0] - 1
    ptr = indptr.tolist()
    adj = indices.tolist()
    out = np.zeros(n, dtype=np.float64)

    for s in range(s_start, s_end):
        dist = [-1] * n
        sigma = [0.0] * n
        delta = [0.0] * n
        order: list[int] = []
        queue = [s]
        dist[s] = 0
        sigma[s] = 1.0
        head = 0
        while head < len(queue):
            v = queue[head]
            head += 1
            order.append(v)
            dv = dist[v]
            sv = sigma[v]
            for k in range(ptr[v], ptr[v + 1]):
                w = adj[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    queue.append(w)
                if dist[w] == dv + 1:
                    sigma[w] += sv
        for idx in range(len(order) - 1, 0, -1):
            w = order[idx]
            coeff = (1.0 + delta[w]) / sigma[w]
            dw = dist[w]
            for k in range(ptr[w], ptr[w + 1]):
                v = adj[k]
                if dist[v] == dw - 1:
                    delta[v] += sigma[v] * coeff
        for v in order:
            if v != s:
                out[v] += delta[v]
    return out
