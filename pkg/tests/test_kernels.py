"""The two kernel backends must be interchangeable bit for bit.

Every test here runs the pure kernel against the compiled one on the same
inputs and requires exact equality: same observation logs, same float sums.
Skipped when the extension is not built (the pure path is then the only
implementation and is covered by the rest of the suite).
"""

import random

import numpy as np
import pytest

from conftest import csr_from_pairs
from peermap import _pure, kernels
from peermap.rng import STREAM_ROUNDS, derive_state

native = pytest.importorskip("peermap._native")


def run_kernel(impl, *, n, pairs, rounds, period=1, cap=1000, top_window=300,
               resp_size=250, ping_count=5, seed=0, observers=()):
    indptr, indices = csr_from_pairs(n, pairs)
    ls = np.full((n, n), -1, dtype=np.int32)
    for a, b in pairs:
        ls[a, b] = 0
        ls[b, a] = 0
    observer_mask = np.zeros(n, dtype=np.uint8)
    deg = np.diff(indptr)
    for o in observers:
        observer_mask[o] = 1
    due = rounds // period
    expected = due * int(sum(deg[o] for o in observers))
    win_cap = max(1, min(top_window, n))
    resp_cap = min(resp_size, win_cap)
    obs_round = np.zeros(expected, dtype=np.int32)
    obs_source = np.zeros(expected, dtype=np.int32)
    obs_observer = np.zeros(expected, dtype=np.int32)
    obs_len = np.zeros(expected, dtype=np.int32)
    obs_peers = np.zeros(expected * resp_cap, dtype=np.int32)
    got_n, max_wl = impl.sim_rounds(
        ls, indptr, indices, rounds, period, cap, top_window, resp_size,
        ping_count, derive_state(seed, STREAM_ROUNDS), observer_mask,
        obs_round, obs_source, obs_observer, obs_len, obs_peers,
    )
    return {
        "n": got_n, "max_wl": max_wl, "ls": ls,
        "round": obs_round, "source": obs_source, "observer": obs_observer,
        "len": obs_len, "peers": obs_peers,
    }


def random_topology(rng, n, extra):
    pairs = {(i, rng.randrange(i)) for i in range(1, n)}  # connected spine
    for _ in range(extra):
        a, b = rng.randrange(n), rng.randrange(n)
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return sorted((min(a, b), max(a, b)) for a, b in pairs)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_sim_rounds_bit_identical(seed):
    rng = random.Random(seed)
    n = rng.randint(6, 45)
    pairs = random_topology(rng, n, 2 * n)
    kw = dict(
        n=n, pairs=pairs, rounds=rng.randint(1, 30),
        period=rng.choice([1, 2, 3]),
        cap=rng.randint(8, 40), seed=seed,
        observers=tuple(sorted(rng.sample(range(n), min(3, n)))),
        ping_count=rng.randint(0, 8),
    )
    kw["top_window"] = rng.randint(2, kw["cap"])
    kw["resp_size"] = rng.randint(1, kw["top_window"])
    a = run_kernel(_pure, **kw)
    b = run_kernel(native, **kw)
    assert a["n"] == b["n"]
    assert a["max_wl"] == b["max_wl"]
    for key in ("round", "source", "observer", "len", "peers"):
        assert np.array_equal(a[key], b[key]), key
    assert np.array_equal(a["ls"], b["ls"])  # full whitelist state matches


def test_sim_rounds_zero_rounds():
    a = run_kernel(_pure, n=5, pairs=[(0, 1), (1, 2), (2, 3), (3, 4)], rounds=0, observers=(0,))
    b = run_kernel(native, n=5, pairs=[(0, 1), (1, 2), (2, 3), (3, 4)], rounds=0, observers=(0,))
    assert a["n"] == b["n"] == 0


def test_sim_rounds_window_larger_than_population():
    kw = dict(n=8, pairs=[(i, (i + 1) % 8) for i in range(8)], rounds=12,
              cap=100, top_window=50, resp_size=25, observers=(0, 4), seed=9)
    a = run_kernel(_pure, **kw)
    b = run_kernel(native, **kw)
    assert np.array_equal(a["peers"], b["peers"])
    assert np.array_equal(a["ls"], b["ls"])


def test_brandes_bit_identical_on_random_graphs():
    rng = random.Random(42)
    for _ in range(25):
        n = rng.randint(2, 40)
        pairs = random_topology(rng, n, rng.randint(0, 3 * n))
        indptr, indices = csr_from_pairs(n, pairs)
        got_pure = _pure.brandes_block(indptr, indices, 0, n)
        got_native = np.asarray(native.brandes_block(indptr, indices, 0, n))
        assert np.array_equal(got_pure, got_native)


def test_brandes_blocks_partition_the_total():
    # block partials summed in order equal the single-block run up to float
    # reassociation; bit-level equality across runs of the SAME partition is
    # what graph.betweenness guarantees and test_graph checks
    rng = random.Random(7)
    n = 30
    pairs = random_topology(rng, n, 50)
    indptr, indices = csr_from_pairs(n, pairs)
    full = np.asarray(native.brandes_block(indptr, indices, 0, n))
    split = np.zeros(n)
    for s in range(0, n, 7):
        split += np.asarray(native.brandes_block(indptr, indices, s, min(s + 7, n)))
    assert np.allclose(full, split, rtol=1e-12, atol=1e-9)


def test_backend_reports_native_here():
    assert kernels.backend() in ("native", "pure")
    assert kernels.COMPILED is (kernels.backend() == "native")
