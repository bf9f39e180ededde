"""Array kernels for dependency-graph traversal and cascade statistics.

Graphs are handed to these kernels as CSR-style int64 numpy arrays. By
default each kernel is numba-jitted (``@njit(cache=True)``); setting the
environment variable ``CELLGAUGE_NO_NUMBA=1`` before import selects the
uncompiled pure-Python/numpy fallback instead (same functions, no JIT).

All counters are int64 with saturation: when a path count or sum crosses
``OVERFLOW_LIMIT`` the kernel sets its overflow flag and the caller must
redo the computation with exact big-integer arithmetic.
"""

from __future__ import annotations

import os

import numpy as np

OVERFLOW_LIMIT = 2**62

NUMBA_DISABLED = os.environ.get("CELLGAUGE_NO_NUMBA", "").lower() in ("1", "true", "yes")


def topo_order_impl(n, out_indptr, out_dst, in_deg):
    """Kahn's algorithm; returns (order, count). count < n means a cycle."""
    order = np.empty(n, np.int64)
    deg = in_deg.copy()
    head = 0
    tail = 0
    for v in range(n):
        if deg[v] == 0:
            order[tail] = v
            tail += 1
    while head < tail:
        v = order[head]
        head += 1
        for e in range(out_indptr[v], out_indptr[v + 1]):
            w = out_dst[e]
            deg[w] -= 1
            if deg[w] == 0:
                order[tail] = w
                tail += 1
    return order, tail


def reachability_impl(order, count, in_indptr, in_src):
    """Path counts from zero-fan-in cells, in topological order.

    Returns (counts, overflow). Multi-edges contribute once per edge.
    """
    n = in_indptr.shape[0] - 1
    r = np.zeros(n, np.int64)
    overflow = False
    for k in range(count):
        v = order[k]
        lo = in_indptr[v]
        hi = in_indptr[v + 1]
        if lo == hi:
            r[v] = 1
        else:
            acc = 0
            for e in range(lo, hi):
                # int() keeps the fallback in Python integers (no silent
                # int64 wrap); under numba it is a no-op cast.
                acc += int(r[in_src[e]])
                if acc > OVERFLOW_LIMIT or acc < 0:
                    overflow = True
                    acc = OVERFLOW_LIMIT
            r[v] = acc
    return r, overflow


def cascade_impl(terminal, order, count, in_indptr, in_src):
    """Member mask and path statistics for one terminal's precedent closure.

    Returns (member, total_paths, length_sum, max_len, cell_count, reach_sum,
    overflow). Path lengths count cells, so a zero-fan-in member contributes
    a single path of length 1.
    """
    n = in_indptr.shape[0] - 1
    member = np.zeros(n, np.uint8)
    stack = np.empty(n, np.int64)
    top = 0
    member[terminal] = 1
    stack[top] = terminal
    top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for e in range(in_indptr[v], in_indptr[v + 1]):
            s = in_src[e]
            if member[s] == 0:
                member[s] = 1
                stack[top] = s
                top += 1
    cnt = np.zeros(n, np.int64)
    lsum = np.zeros(n, np.int64)
    mx = np.zeros(n, np.int64)
    overflow = False
    cell_count = 0
    reach_sum = 0
    for k in range(count):
        v = order[k]
        if member[v] == 0:
            continue
        cell_count += 1
        lo = in_indptr[v]
        hi = in_indptr[v + 1]
        if lo == hi:
            cnt[v] = 1
            lsum[v] = 1
            mx[v] = 1
        else:
            c = 0
            s = 0
            m = 0
            for e in range(lo, hi):
                p = in_src[e]
                c += int(cnt[p])
                s += int(lsum[p])
                if mx[p] > m:
                    m = int(mx[p])
                if c > OVERFLOW_LIMIT or c < 0 or s > OVERFLOW_LIMIT or s < 0:
                    overflow = True
                    c = OVERFLOW_LIMIT if c > OVERFLOW_LIMIT or c < 0 else c
                    s = OVERFLOW_LIMIT if s > OVERFLOW_LIMIT or s < 0 else s
            s += c
            if s > OVERFLOW_LIMIT or s < 0:
                overflow = True
                s = OVERFLOW_LIMIT
            cnt[v] = c
            lsum[v] = s
            mx[v] = 1 + m
        reach_sum += int(cnt[v])
        if reach_sum > OVERFLOW_LIMIT or reach_sum < 0:
            overflow = True
            reach_sum = OVERFLOW_LIMIT
    return (
        member,
        cnt[terminal],
        lsum[terminal],
        mx[terminal],
        cell_count,
        reach_sum,
        overflow,
    )


def _jit(fn):
    if NUMBA_DISABLED:
        return fn
    try:
        from numba import njit
    except ImportError:
        return fn
    return njit(cache=True)(fn)


topo_order = _jit(topo_order_impl)
reachability_counts = _jit(reachability_impl)
cascade_arrays = _jit(cascade_impl)


def using_numba() -> bool:
    return topo_order is not topo_order_impl
