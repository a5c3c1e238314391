#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs the gossip round loop and the betweenness block kernel through both
implementations on identical inputs, checks the outputs agree bit for bit,
and prints wall times with the speedup. Usage::

    python benchmarks/bench_kernels.py [--nodes N] [--rounds R] [--repeat K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from peermap import _pure, graph, sim
from peermap.rng import STREAM_ROUNDS, derive_state

try:
    from peermap import _native
except ImportError:
    _native = None


def sim_kernel_args(node_count: int, rounds: int, seed: int) -> tuple:
    """The exact argument tuple the simulator hands to sim_rounds."""
    cfg = sim.SimConfig(
        node_count=node_count, rounds=rounds, observers=(0, 1, 2), seed=seed,
    )
    n = cfg.node_count
    edges = sim.build_topology(cfg)
    indptr, indices = sim._csr(n, edges)
    ls = np.full((n, n), -1, dtype=np.int32)
    for i, j in edges:
        ls[i, j] = 0
        ls[j, i] = 0
    observer_mask = np.zeros(n, dtype=np.uint8)
    for o in cfg.observers:
        observer_mask[o] = 1
    degrees = np.diff(indptr)
    due_rounds = cfg.rounds // cfg.handshake_period
    expected = due_rounds * int(sum(degrees[o] for o in cfg.observers))
    resp_cap = min(cfg.response_size, max(1, min(cfg.top_window, n)))
    return (
        ls, indptr, indices,
        cfg.rounds, cfg.handshake_period, cfg.whitelist_cap,
        cfg.top_window, cfg.response_size, cfg.effective_ping_count,
        derive_state(cfg.seed, STREAM_ROUNDS),
        observer_mask,
        np.zeros(expected, dtype=np.int32),
        np.zeros(expected, dtype=np.int32),
        np.zeros(expected, dtype=np.int32),
        np.zeros(expected, dtype=np.int32),
        np.zeros(expected * resp_cap, dtype=np.int32),
    )


def time_sim(impl, args, repeat: int):
    best = None
    kept = None
    for _ in range(repeat):
        # the kernel mutates ls and fills the observation arrays in place
        copies = tuple(a.copy() if isinstance(a, np.ndarray) else a for a in args)
        t0 = time.perf_counter()
        head = impl.sim_rounds(*copies)
        dt = time.perf_counter() - t0
        if best is None or dt < best:
            best = dt
            kept = (head, [c for c in copies if isinstance(c, np.ndarray)])
    return best, kept


def compare_line(name: str, pure_dt: float, native_dt: float | None, agree: bool | None):
    print(f"  pure    {pure_dt * 1000:10.1f} ms")
    if native_dt is None:
        print("  native  (extension not built)")
        return
    print(f"  native  {native_dt * 1000:10.1f} ms   "
          f"speedup {pure_dt / native_dt:6.1f}x   outputs identical: {agree}")
    if not agree:
        raise SystemExit(f"backend mismatch in {name}")


def bench_sim(node_count: int, rounds: int, repeat: int) -> None:
    args = sim_kernel_args(node_count, rounds, seed=11)
    print(f"sim_rounds  n={node_count} rounds={rounds}")
    pure_dt, (pure_head, pure_arrays) = time_sim(_pure, args, repeat)
    if _native is None:
        compare_line("sim_rounds", pure_dt, None, None)
        return
    native_dt, (native_head, native_arrays) = time_sim(_native, args, repeat)
    agree = pure_head == native_head and all(
        np.array_equal(a, b) for a, b in zip(pure_arrays, native_arrays)
    )
    compare_line("sim_rounds", pure_dt, native_dt, agree)


def bench_betweenness(node_count: int, repeat: int) -> None:
    cfg = sim.SimConfig(node_count=node_count, rounds=1, out_degree=6, seed=3)
    edges = sim.build_topology(cfg)
    g = graph.build_graph([(sim.node_ip(i), sim.node_ip(j)) for i, j in edges])
    indptr, indices = g.csr()

    def run(impl):
        best = None
        out = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            res = impl.brandes_block(indptr, indices, 0, g.n)
            dt = time.perf_counter() - t0
            if best is None or dt < best:
                best, out = dt, res
        return best, out

    print(f"brandes     n={g.n} edges={g.edge_count}")
    pure_dt, pure_out = run(_pure)
    if _native is None:
        compare_line("brandes_block", pure_dt, None, None)
        return
    native_dt, native_out = run(_native)
    compare_line("brandes_block", pure_dt, native_dt,
                 bool(np.array_equal(pure_out, native_out)))


def main() -> None:
    ap = argparse.ArgumentParser(
        description="compare compiled and pure kernel implementations")
    ap.add_argument("--nodes", type=int, default=300)
    ap.add_argument("--rounds", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    bench_sim(args.nodes, args.rounds, args.repeat)
    print()
    bench_betweenness(args.nodes, args.repeat)


if __name__ == "__main__":
    main()
