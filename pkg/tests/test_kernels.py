"""The jitted kernels and their uncompiled fallbacks must agree exactly."""

import random
import subprocess
import sys

import numpy as np
import pytest

from cellgauge import _kernels


def random_csr(rng, n_max=40):
    n = rng.randint(1, n_max)
    edges = []
    for j in range(n):
        for i in range(j):
            if rng.random() < 0.2:
                for _ in range(rng.randint(1, 3)):
                    edges.append((i, j))
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    in_deg = np.bincount(dst, minlength=n).astype(np.int64)
    out_deg = np.bincount(src, minlength=n).astype(np.int64)
    order_in = np.argsort(dst, kind="stable")
    in_src = src[order_in]
    in_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(in_deg, out=in_indptr[1:])
    order_out = np.argsort(src, kind="stable")
    out_dst = dst[order_out]
    out_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(out_deg, out=out_indptr[1:])
    return n, in_indptr, in_src, out_indptr, out_dst, in_deg


@pytest.mark.parametrize("seed", range(10))
def test_jitted_and_fallback_agree(seed):
    rng = random.Random(seed)
    n, in_indptr, in_src, out_indptr, out_dst, in_deg = random_csr(rng)

    order_a, count_a = _kernels.topo_order(n, out_indptr, out_dst, in_deg)
    order_b, count_b = _kernels.topo_order_impl(n, out_indptr, out_dst, in_deg)
    assert count_a == count_b == n
    assert np.array_equal(order_a, order_b)

    reach_a, ov_a = _kernels.reachability_counts(order_a, count_a, in_indptr, in_src)
    reach_b, ov_b = _kernels.reachability_impl(order_b, count_b, in_indptr, in_src)
    assert ov_a == ov_b is False
    assert np.array_equal(reach_a, reach_b)

    terminal = n - 1
    res_a = _kernels.cascade_arrays(terminal, order_a, count_a, in_indptr, in_src)
    res_b = _kernels.cascade_impl(terminal, order_b, count_b, in_indptr, in_src)
    assert np.array_equal(res_a[0], res_b[0])
    assert tuple(int(x) for x in res_a[1:6]) == tuple(int(x) for x in res_b[1:6])
    assert bool(res_a[6]) == bool(res_b[6])


def test_overflow_flag_raised_on_doubling_chain():
    # 70 nodes, two parallel edges each: counts reach 2**69 > int64.
    n = 70
    src = np.repeat(np.arange(n - 1, dtype=np.int64), 2)
    dst = np.repeat(np.arange(1, n, dtype=np.int64), 2)
    in_deg = np.bincount(dst, minlength=n).astype(np.int64)
    in_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(in_deg, out=in_indptr[1:])
    in_src = src[np.argsort(dst, kind="stable")]
    out_deg = np.bincount(src, minlength=n).astype(np.int64)
    out_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(out_deg, out=out_indptr[1:])
    out_dst = dst[np.argsort(src, kind="stable")]

    order, count = _kernels.topo_order(n, out_indptr, out_dst, in_deg)
    _, overflow = _kernels.reachability_counts(order, count, in_indptr, in_src)
    assert overflow
    res = _kernels.cascade_arrays(n - 1, order, count, in_indptr, in_src)
    assert res[6]  # overflow flag


def test_env_flag_selects_fallback():
    code = (
        "import os; os.environ['CELLGAUGE_NO_NUMBA'] = '1'; "
        "from cellgauge import _kernels; "
        "assert not _kernels.using_numba(); "
        "assert _kernels.topo_order is _kernels.topo_order_impl"
    )
    subprocess.run([sys.executable, "-c", code], check=True)


def test_default_uses_numba_when_available():
    assert _kernels.using_numba()
