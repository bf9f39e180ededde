#!/usr/bin/env python3
"""Benchmark the graph kernels: numba-jitted vs pure-Python fallback.

Builds a layered random DAG in CSR form and times topological ordering,
reachability counting, and per-terminal cascade statistics through both
code paths. The jitted path is what `cellgauge analyze` uses by default;
the fallback is what runs under CELLGAUGE_NO_NUMBA=1.

Usage: python benchmarks/bench_kernels.py [--nodes N] [--edges-per-node K]
"""

import argparse
import random
import time

import numpy as np

from cellgauge import _kernels


def build_csr(n_nodes: int, edges_per_node: int, seed: int = 7):
    rng = random.Random(seed)
    src_list, dst_list = [], []
    for v in range(1, n_nodes):
        for _ in range(min(edges_per_node, v)):
            src_list.append(rng.randrange(max(0, v - 50), v))
            dst_list.append(v)
    src = np.asarray(src_list, dtype=np.int64)
    dst = np.asarray(dst_list, dtype=np.int64)
    in_deg = np.bincount(dst, minlength=n_nodes).astype(np.int64)
    out_deg = np.bincount(src, minlength=n_nodes).astype(np.int64)
    in_indptr = np.zeros(n_nodes + 1, np.int64)
    np.cumsum(in_deg, out=in_indptr[1:])
    in_src = src[np.argsort(dst, kind="stable")]
    out_indptr = np.zeros(n_nodes + 1, np.int64)
    np.cumsum(out_deg, out=out_indptr[1:])
    out_dst = dst[np.argsort(src, kind="stable")]
    return n_nodes, in_indptr, in_src, out_indptr, out_dst, in_deg, len(src_list)


def timeit(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=50_000)
    ap.add_argument("--edges-per-node", type=int, default=3)
    ap.add_argument("--terminals", type=int, default=20,
                    help="cascade kernels run once per terminal")
    args = ap.parse_args()

    n, in_indptr, in_src, out_indptr, out_dst, in_deg, m = build_csr(
        args.nodes, args.edges_per_node
    )
    print(f"graph: {n} nodes, {m} edges")
    if not _kernels.using_numba():
        print("warning: numba unavailable or disabled; both columns run the fallback")

    # Warm the jitted path so compilation stays out of the timings.
    order, count = _kernels.topo_order(n, out_indptr, out_dst, in_deg)
    _kernels.reachability_counts(order, count, in_indptr, in_src)
    _kernels.cascade_arrays(n - 1, order, count, in_indptr, in_src)

    rows = []

    jt, (order, count) = timeit(_kernels.topo_order, n, out_indptr, out_dst, in_deg)
    ft, _ = timeit(_kernels.topo_order_impl, n, out_indptr, out_dst, in_deg, repeat=1)
    rows.append(("topological order", jt, ft))

    jt, (reach, overflow) = timeit(
        _kernels.reachability_counts, order, count, in_indptr, in_src
    )
    ft, _ = timeit(_kernels.reachability_impl, order, count, in_indptr, in_src, repeat=1)
    rows.append((f"reachability (overflow={bool(overflow)})", jt, ft))

    terminals = list(range(n - args.terminals, n))

    def cascades(kernel):
        out = 0
        for t in terminals:
            out += int(kernel(t, order, count, in_indptr, in_src)[4])
        return out

    jt, cells_j = timeit(cascades, _kernels.cascade_arrays, repeat=1)
    ft, cells_f = timeit(cascades, _kernels.cascade_impl, repeat=1)
    assert cells_j == cells_f
    rows.append((f"cascade stats x{args.terminals}", jt, ft))

    width = max(len(r[0]) for r in rows)
    print(f"\n{'kernel'.ljust(width)}  {'jitted':>10}  {'fallback':>10}  {'speedup':>8}")
    for name, jt, ft in rows:
        print(f"{name.ljust(width)}  {jt * 1e3:9.1f}ms  {ft * 1e3:9.1f}ms  {ft / jt:7.1f}x")


if __name__ == "__main__":
    main()
